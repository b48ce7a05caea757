#include "iomc/file_util.hpp"

#include <fstream>
#include <iterator>
#include <system_error>

#include "iomc/types.hpp"

namespace iomc {

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

namespace {

void write_bytes_atomic(const std::filesystem::path& path, const char* data, std::size_t n) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
        out.write(data, static_cast<std::streamsize>(n));
        if (!out) throw std::system_error(errno, std::generic_category(), "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    write_bytes_atomic(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    write_bytes_atomic(path, text.data(), text.size());
}

}  // namespace iomc
