#pragma once

#include <string>
#include <vector>

namespace pila::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

// Entry point shared by the executable and the in-process tests. args[0] is the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

// 64-bit FNV-1a, hex-encoded.
std::string content_hash(const std::string& bytes);

}  // namespace pila::cli
