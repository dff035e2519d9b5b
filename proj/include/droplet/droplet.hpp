#pragma once

#include "droplet/approximation.hpp"
#include "droplet/bigint.hpp"
#include "droplet/combinatorics.hpp"
#include "droplet/entropy.hpp"
#include "droplet/error.hpp"
#include "droplet/json_io.hpp"
#include "droplet/lde.hpp"
#include "droplet/model.hpp"
#include "droplet/parallel.hpp"
#include "droplet/poisson.hpp"
#include "droplet/rng.hpp"
#include "droplet/sampler.hpp"
