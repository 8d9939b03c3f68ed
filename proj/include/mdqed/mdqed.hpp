#pragma once

// Umbrella header for the library and the scenario runner.

#include "mdqed/errors.hpp"
#include "mdqed/units.hpp"
#include "mdqed/quadrature.hpp"
#include "mdqed/geometry.hpp"
#include "mdqed/material.hpp"
#include "mdqed/layout.hpp"
#include "mdqed/coupling.hpp"
#include "mdqed/green.hpp"
#include "mdqed/emission.hpp"
#include "mdqed/dynamics.hpp"
#include "mdqed/scenario.hpp"
#include "mdqed/runner.hpp"
