#pragma once

#include "flowlag/checkpoint.hpp"
#include "flowlag/dataset.hpp"
#include "flowlag/diagnostics.hpp"
#include "flowlag/errors.hpp"
#include "flowlag/gaussian_oracle.hpp"
#include "flowlag/interpolant.hpp"
#include "flowlag/nn.hpp"
#include "flowlag/report.hpp"
#include "flowlag/rng.hpp"
#include "flowlag/schedule.hpp"
#include "flowlag/solver.hpp"
#include "flowlag/training.hpp"
#include "flowlag/velocity_field.hpp"
