#pragma once

// Umbrella header (everything except report.hpp, which needs nlohmann/json).

#include "hzfem/errors.hpp"
#include "hzfem/sym_tensor.hpp"
#include "hzfem/mesh.hpp"
#include "hzfem/tensor_geometry.hpp"
#include "hzfem/quadrature.hpp"
#include "hzfem/lagrange.hpp"
#include "hzfem/spaces.hpp"
#include "hzfem/assembly.hpp"
#include "hzfem/solver.hpp"
#include "hzfem/verify.hpp"
#include "hzfem/convergence.hpp"
#include "hzfem/suite.hpp"
