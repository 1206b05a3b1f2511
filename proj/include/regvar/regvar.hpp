#pragma once

#include "asymptotic.hpp"
#include "calculus.hpp"
#include "catalog.hpp"
#include "commands.hpp"
#include "critical.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "formula.hpp"
#include "linalg.hpp"
#include "map_spec.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "polynomial.hpp"
#include "regularity.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "spec_io.hpp"
