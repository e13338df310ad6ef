#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace plumeseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Flat `key=value` lines; `#` starts a comment. Keys are returned as written;
/// `n_scenes` and `n-scenes` both name the flag `--n-scenes`.
std::map<std::string, std::string> parse_config(std::string_view text, std::string_view source = "<config>");

/// Runs one subcommand; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Scene directories below `root` (or `root` itself when it holds scene.cfg), sorted.
std::vector<std::filesystem::path> scene_dirs(const std::filesystem::path& root);

}  // namespace plumeseg::cli
