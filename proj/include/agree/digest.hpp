#pragma once

#include <string>
#include <string_view>

namespace agree {

std::string sha256_hex(std::string_view bytes);
std::string file_sha256_hex(const std::string& path);

}  // namespace agree
