#pragma once

// Umbrella header for the mixture-logit-network library.

#include "mln/dataset.hpp"
#include "mln/errors.hpp"
#include "mln/estimation.hpp"
#include "mln/idx.hpp"
#include "mln/loss.hpp"
#include "mln/matrix.hpp"
#include "mln/metrics.hpp"
#include "mln/model.hpp"
#include "mln/noise.hpp"
#include "mln/numerics.hpp"
#include "mln/rng.hpp"
#include "mln/serialize.hpp"
#include "mln/trainer.hpp"
#include "mln/uncertainty.hpp"
#include "mln/version.hpp"
