#pragma once

#include <string>
#include <string_view>

namespace gridcascade::detail {

std::string sha256_hex(std::string_view data);

}  // namespace gridcascade::detail
