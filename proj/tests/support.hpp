#pragma once

#include <doctest.h>

#include "oncodyn/errors.hpp"
#include "oncodyn/tumor_model.hpp"

namespace oncodyn::testing {

template <class F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an oncodyn::Error");
  return ErrorCode::InvalidArgument;
}

inline ModelParams fixture_params() { return {}; }

inline ModelParams healthy_stable_params() {
  ModelParams p;
  p.a12 = 2.0;
  return p;
}

}  // namespace oncodyn::testing
