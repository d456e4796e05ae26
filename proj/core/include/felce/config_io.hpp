#pragma once

// GameConfig <-> INI text. Sections are [server] and [device.1] .. [device.n];
// keys match the DeviceParams / ServerParams field names.

#include <filesystem>
#include <string>
#include <string_view>

#include "felce/game_model.hpp"

namespace felce {

GameConfig parse_config(std::string_view text);
GameConfig load_config(const std::filesystem::path& path);

std::string format_config(const GameConfig& cfg);
void save_config(const GameConfig& cfg, const std::filesystem::path& path);

}  // namespace felce
