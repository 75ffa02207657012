#pragma once

// Umbrella header.

#include <psel/data.hpp>
#include <psel/error.hpp>
#include <psel/glm.hpp>
#include <psel/io.hpp>
#include <psel/objectives.hpp>
#include <psel/pareto.hpp>
#include <psel/penalized.hpp>
#include <psel/svg.hpp>
