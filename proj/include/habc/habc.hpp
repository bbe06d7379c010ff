#pragma once

#include "habc/blowfly.hpp"
#include "habc/csv.hpp"
#include "habc/diagnostics.hpp"
#include "habc/exp_demo.hpp"
#include "habc/gradients.hpp"
#include "habc/likelihoods.hpp"
#include "habc/logistic.hpp"
#include "habc/prior.hpp"
#include "habc/rng.hpp"
#include "habc/samplers.hpp"
#include "habc/simulator.hpp"
#include "habc/toy.hpp"
#include "habc/types.hpp"
