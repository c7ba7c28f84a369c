#pragma once

#include "clp/error.hpp"
#include "clp/model.hpp"
#include "clp/normal.hpp"
#include "clp/quadrature.hpp"
#include "clp/kernel.hpp"
#include "clp/optim.hpp"
#include "clp/likelihood.hpp"
#include "clp/truth.hpp"
#include "clp/asymptotics.hpp"
#include "clp/laplace.hpp"
#include "clp/rng.hpp"
#include "clp/sim.hpp"
#include "clp/io.hpp"
#include "clp/svg.hpp"

namespace clp {
inline constexpr const char* kVersion = "0.1.0";
}
