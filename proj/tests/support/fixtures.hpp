#pragma once

#include <memory>

#include "hyperkb/hyql/eval.hpp"
#include "hyperkb/store.hpp"

namespace hyperkb::testing {

/// ML Schema, the seismic extension and the hand-built seismic survey data.
std::unique_ptr<KnowledgeBase> seismic_fixture();

/// Built-ins plus the similarSiesmic spelling used by the first investigation.
hyql::FunctionRegistry alias_registry();

}  // namespace hyperkb::testing
