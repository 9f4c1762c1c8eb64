#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpaforge/capture_io.hpp"

namespace fpaforge::features {

inline constexpr std::size_t kFeatureCount = 61;

enum class ColumnKind { Numeric, Text, Hex };
// How the benchmark preprocessing treats a column before training.
enum class MlRole { Drop, Categorical, Numeric };

struct Column {
  int id;  // 1..61
  std::string_view name;
  ColumnKind kind;
  MlRole role;
};

const std::array<Column, kFeatureCount>& schema();
const Column& column_by_name(std::string_view name);  // throws InvalidArgument
std::optional<std::size_t> column_index(std::string_view name);

using FeatureRecord = std::array<std::string, kFeatureCount>;

struct Profile {
  std::string name;
  std::vector<int> ids;  // feature ids in output order
};

// full61, tcp, mqtt, tcp_mqtt, tcp_mqtt_port, tcp_core. Hyphens accepted.
Profile profile_by_name(std::string_view name);
std::vector<std::string> profile_names();

struct ExtractResult {
  std::vector<FeatureRecord> records;
  std::size_t skipped_frames = 0;       // not Ethernet/IPv4/TCP
  std::size_t mqtt_decode_errors = 0;   // port 1883 payloads that do not decode
};

std::string format_frame_time(capture::Timestamp ts);

ExtractResult extract_features(std::span<const capture::CaptureFrame> frames);

struct LabelSpec {
  std::string attack_type;  // Attack_type value; Attack_label is 0 for "Normal"
};

std::vector<std::string> csv_header(const Profile& profile, const std::optional<LabelSpec>& label);
std::string render_feature_csv(std::span<const FeatureRecord> records, const Profile& profile,
                               const std::optional<LabelSpec>& label = std::nullopt);
void write_feature_csv(std::span<const FeatureRecord> records, const std::filesystem::path& path,
                       const Profile& profile, const std::optional<LabelSpec>& label = std::nullopt);

}  // namespace fpaforge::features
