#ifndef BHQR_BHQR_HPP_
#define BHQR_BHQR_HPP_

// Bayesian two-part hurdle quantile regression for counts with mass points.

#include "bhqr/diagnostics.hpp"
#include "bhqr/distributions.hpp"
#include "bhqr/error.hpp"
#include "bhqr/hurdle_transform.hpp"
#include "bhqr/io.hpp"
#include "bhqr/logistic_mcmc.hpp"
#include "bhqr/mcmc.hpp"
#include "bhqr/qr_gibbs.hpp"
#include "bhqr/random.hpp"
#include "bhqr/simulation.hpp"
#include "bhqr/two_part.hpp"

#endif  // BHQR_BHQR_HPP_
