#pragma once

// Convenience umbrella for the whole library.

#include "box_min.hpp"
#include "damage.hpp"
#include "drucker_prager.hpp"
#include "errors.hpp"
#include "evolution.hpp"
#include "fem.hpp"
#include "io.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "plots.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "tensor.hpp"
#include "verify.hpp"
