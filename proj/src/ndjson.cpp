#include "adaptids/ndjson.hpp"

#include "adaptids/error.hpp"
#include "adaptids/format.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <ostream>

namespace adaptids::ndjson {

namespace {

using nlohmann::json;

template <typename T>
T integer_field(const json& obj, const char* key, long long lo, long long hi) {
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw std::invalid_argument(std::string(key) + " must be an integer");
    const auto n = v.get<long long>();
    if (n < lo || n > hi) throw std::invalid_argument(std::string(key) + " out of range");
    return static_cast<T>(n);
}

Ipv4 address_field(const json& obj, const char* key) {
    const auto& v = obj.at(key);
    if (!v.is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
    auto addr = Ipv4::parse(v.get_ref<const std::string&>());
    if (!addr) throw std::invalid_argument(std::string(key) + " is not an IPv4 address");
    return *addr;
}

PacketRecord parse_line(const std::string& line) {
    const json obj = json::parse(line);
    if (!obj.is_object()) throw std::invalid_argument("line is not a JSON object");
    PacketRecord p;
    const auto& ts = obj.at("ts");
    if (!ts.is_number()) throw std::invalid_argument("ts must be a number");
    p.ts = ts.get<double>();
    p.src_addr = address_field(obj, "src_ip");
    p.dst_addr = address_field(obj, "dst_ip");
    p.src_port = integer_field<std::uint16_t>(obj, "src_port", 0, 65535);
    p.dst_port = integer_field<std::uint16_t>(obj, "dst_port", 0, 65535);
    p.proto = integer_field<std::uint8_t>(obj, "proto", 0, 255);
    p.length = integer_field<std::uint16_t>(obj, "len", 0, 65535);
    p.ttl = integer_field<std::uint8_t>(obj, "ttl", 0, 255);
    if (auto problem = validate(p); !problem.empty()) throw std::invalid_argument(problem);
    return p;
}

} // namespace

ReadResult read(std::istream& in) {
    ReadResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            result.records.push_back(parse_line(line));
        } catch (const std::exception& e) {
            result.skipped.push_back({line_no, e.what()});
        }
    }
    return result;
}

ReadResult read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return read(in);
}

std::string to_line(const PacketRecord& p) {
    std::string out = "{\"ts\":";
    out += format_double(p.ts);
    out += ",\"src_ip\":\"" + p.src_addr.to_string() + "\"";
    out += ",\"dst_ip\":\"" + p.dst_addr.to_string() + "\"";
    out += ",\"src_port\":" + std::to_string(p.src_port);
    out += ",\"dst_port\":" + std::to_string(p.dst_port);
    out += ",\"proto\":" + std::to_string(p.proto);
    out += ",\"len\":" + std::to_string(p.length);
    out += ",\"ttl\":" + std::to_string(p.ttl);
    out += '}';
    return out;
}

void write(std::ostream& out, std::span<const PacketRecord> records) {
    for (const auto& p : records) out << to_line(p) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "NDJSON write failed");
}

} // namespace adaptids::ndjson
