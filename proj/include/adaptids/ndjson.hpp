#pragma once

#include "adaptids/core.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace adaptids::ndjson {

struct LineIssue {
    std::size_t line = 0;  // 1-based
    std::string reason;
};

struct ReadResult {
    std::vector<PacketRecord> records;
    std::vector<LineIssue> skipped;  ///< MalformedLine diagnostics
};

/// One object per line with keys ts, src_ip, dst_ip, src_port, dst_port,
/// proto, len, ttl. Invalid lines are skipped and reported; blank lines are
/// ignored. Unknown keys are ignored.
ReadResult read(std::istream& in);
ReadResult read(const std::filesystem::path& path);

std::string to_line(const PacketRecord& p);
void write(std::ostream& out, std::span<const PacketRecord> records);

} // namespace adaptids::ndjson
