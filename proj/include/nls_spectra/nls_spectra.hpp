#pragma once

#include "errors.hpp"
#include "banded.hpp"
#include "mesh.hpp"
#include "block.hpp"
#include "ground_state.hpp"
#include "operators.hpp"
#include "eigensolver.hpp"
#include "oracle.hpp"
#include "experiments.hpp"
#include "io.hpp"
