#pragma once

#include "rfilter/filter_model.hpp"
#include "rfilter/robust_filter.hpp"

#include <string>
#include <vector>

namespace rfilter {

std::vector<std::string> builtin_model_names();

/// One of example_s1, uncorrelated_1d, correlated_linear, correlated_2obs.
FilterModel builtin_model(const std::string& name);

/**
 * @brief Model from an inline JSON coefficient spec.
 *
 * Keys: name, dx, dy, db, h [dy strings], Z [dy columns of dx strings] (optional),
 * drift [dx strings], drift_form ("ito" | "stratonovich"), L [db columns of dx strings],
 * x0 ({"point": [...]} | {"atoms": [[...], ...], "weights": [...]} | {"box": {"lo": [...], "hi": [...]}}),
 * h_bound (optional). Expressions see x1.., y1..; x and y alias the first
 * coordinate when the dimension is one.
 */
FilterModel model_from_json(const std::string& text);

/// Builtin name, or inline JSON when the argument starts with '{'.
FilterModel resolve_model(const std::string& id);

/// "one", "zero", "tanh" (tanh x1), "sin" (sin x1), or "expr:<expression in x.., y..>".
TestFunction builtin_test_function(const std::string& id, std::size_t dx, std::size_t dy);

}  // namespace rfilter
