#include "agro/paths.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "agro/error.hpp"

#ifndef AGRO_DEFAULT_DATA_DIR
#define AGRO_DEFAULT_DATA_DIR "data"
#endif

namespace agro {

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("AGRO_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return AGRO_DEFAULT_DATA_DIR;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    // Distinct temporaries so concurrent writers of one path never share a file;
    // the rename makes the last writer win.
    static std::atomic<unsigned long> counter{0};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out << contents;
        if (!out.flush()) {
            throw Error("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace agro
