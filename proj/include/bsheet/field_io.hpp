#pragma once

#include <string>

#include "bsheet/capacity.hpp"
#include "bsheet/sheet.hpp"

namespace bsheet {

// JSON record of a field sample:
//   {"format": "bsheet-field/1", "N", "d", "provenance": "exact"|"grid",
//    "seed", "stream",
//    "grid": {"lower": [...], "upper": [...], "cells": [...]}  or
//    "points": [[t_1..t_N], ...],
//    "values": [v_0^1..v_0^d, v_1^1, ...]}   point-major, d per point
// Grid nodes are ordered row-major with axis 0 slowest.
std::string field_to_json(const FieldSample& field);
FieldSample field_from_json(const std::string& text);  // throws InvalidConfig

// {"atoms": [[x_1..x_dim], ...], "weights": [...], "h": h}
std::string measure_to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const std::string& text);  // throws InvalidConfig

}  // namespace bsheet
