#pragma once

// Umbrella header.
#include "config.hpp"
#include "database.hpp"
#include "detection.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "firefly.hpp"
#include "modal.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "truss.hpp"
