#pragma once

#include "grpadmm/core.hpp"
#include "grpadmm/csv.hpp"
#include "grpadmm/harness.hpp"
#include "grpadmm/image.hpp"
#include "grpadmm/linops.hpp"
#include "grpadmm/problem.hpp"
#include "grpadmm/problems.hpp"
#include "grpadmm/prox.hpp"
#include "grpadmm/random.hpp"
#include "grpadmm/run.hpp"
#include "grpadmm/serialize.hpp"
#include "grpadmm/solver.hpp"
