#include "mtpe/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "mtpe/error.hpp"
#include "mtpe/text.hpp"

namespace mtpe::io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot write " + path.string());
  }
}

void for_each_json_line(std::string_view content, const std::string& name,
                        const std::function<void(std::size_t, const nlohmann::json&)>& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    ++line_no;
    std::string_view line = text::trim(content.substr(start, end - start));
    if (!line.empty()) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(name, line_no, std::string("invalid JSON: ") + e.what());
      }
      try {
        fn(line_no, j);
      } catch (const ParseError&) {
        throw;
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(name, line_no, e.what());
      } catch (const Error& e) {
        throw ParseError(name, line_no, e.what());
      }
    }
    if (end == content.size()) break;
    start = end + 1;
  }
}

std::string dump_line(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

}  // namespace mtpe::io
