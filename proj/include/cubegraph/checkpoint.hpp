#pragma once

#include <filesystem>
#include <string>

#include "cubegraph/model.hpp"

namespace cubegraph {

inline constexpr int kCheckpointVersion = 1;

// JSON document: format_version, config, training metadata and every
// parameter as {shape, values}. Doubles are written in shortest round-trip
// form, so equal models give byte-identical files.
std::string checkpoint_to_json(const TrainedModel& model);
TrainedModel checkpoint_from_json(const std::string& text, const std::string& origin = "<memory>");

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace cubegraph
