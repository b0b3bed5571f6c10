#pragma once

namespace dynborrow::detail {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace dynborrow::detail
