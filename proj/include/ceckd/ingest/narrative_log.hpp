#ifndef CECKD_INGEST_NARRATIVE_LOG_HPP
#define CECKD_INGEST_NARRATIVE_LOG_HPP

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ceckd/ec/term.hpp"
#include "ceckd/ec/types.hpp"
#include "ceckd/error.hpp"
#include "ceckd/ingest/records.hpp"
#include "json.hpp"

namespace ceckd::ingest {

namespace fs = std::filesystem;

namespace detail {

[[noreturn]] inline void io_failure(const std::string& what, const fs::path& p)
{
    throw LogCorrupt(what + " " + p.string() + ": " + std::strerror(errno));
}

inline void write_all(int fd, const std::string& data, const fs::path& p)
{
    std::size_t done = 0;
    while (done < data.size()) {
        const auto n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            io_failure("write", p);
        }
        done += static_cast<std::size_t>(n);
    }
}

inline void fsync_dir(const fs::path& dir)
{
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
}

inline std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

/// Replaces `path` with `content` durably (temp file, fsync, rename).
inline void write_file_atomic(const fs::path& path, const std::string& content)
{
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0)
        detail::io_failure("open", tmp);
    detail::write_all(fd, content, tmp);
    if (::fsync(fd) != 0)
        detail::io_failure("fsync", tmp);
    ::close(fd);
    fs::rename(tmp, path);
    detail::fsync_dir(path.parent_path());
}

/**
 * Append-only event log, one NDJSON file per patient:
 *   {"timestamp":"2014-10-01T08:00:00Z","tick":0,"event":"obs(cgm,14.0)"}
 * Each batch is fsync'ed before append() returns. A torn final line left
 * by a crash is dropped on the next read or append.
 */
class NarrativeLog {
public:
    struct Entry {
        EpochSeconds timestamp = 0;
        ec::Tick tick = 0;
        ec::Term event;

        friend bool operator==(const Entry&, const Entry&) = default;
    };

    explicit NarrativeLog(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    const fs::path& dir() const noexcept { return dir_; }
    fs::path file_of(const std::string& patient) const { return dir_ / (patient + ".ndjson"); }

    void append(const std::string& patient, const std::vector<Entry>& batch)
    {
        if (batch.empty())
            return;
        std::string data;
        for (const auto& e : batch) {
            nlohmann::json j{{"timestamp", format_iso8601(e.timestamp)}, {"tick", e.tick}, {"event", e.event.text()}};
            data += j.dump();
            data += '\n';
        }
        const auto path = file_of(patient);
        const bool fresh = !fs::exists(path);
        drop_torn_tail(path);
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
        if (fd < 0)
            detail::io_failure("open", path);
        detail::write_all(fd, data, path);
        if (::fsync(fd) != 0)
            detail::io_failure("fsync", path);
        ::close(fd);
        if (fresh)
            detail::fsync_dir(dir_);
    }

    /// Creates an empty log for `patient` if it has none.
    void touch(const std::string& patient)
    {
        const auto path = file_of(patient);
        if (fs::exists(path))
            return;
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT, 0644);
        if (fd < 0)
            detail::io_failure("open", path);
        ::fsync(fd);
        ::close(fd);
        detail::fsync_dir(dir_);
    }

    std::vector<Entry> read(const std::string& patient) const
    {
        std::vector<Entry> out;
        const auto path = file_of(patient);
        if (!fs::exists(path))
            return out;
        const std::string text = detail::read_file(path);
        std::size_t pos = 0, line = 0;
        while (pos < text.size()) {
            const auto nl = text.find('\n', pos);
            if (nl == std::string::npos)
                break; // torn tail
            ++line;
            const std::string_view row(text.data() + pos, nl - pos);
            pos = nl + 1;
            try {
                const auto j = nlohmann::json::parse(row);
                Entry e{parse_iso8601(j.at("timestamp").get<std::string>()), j.at("tick").get<ec::Tick>(),
                        ec::parse_term(j.at("event").get<std::string>())};
                if (!out.empty() && e.tick < out.back().tick)
                    throw LogCorrupt("ticks go backwards");
                out.push_back(std::move(e));
            } catch (const std::exception& ex) {
                throw LogCorrupt(path.string() + " line " + std::to_string(line) + ": " + ex.what());
            }
        }
        return out;
    }

    /// Patients with a log file, sorted.
    std::vector<std::string> patients() const
    {
        std::vector<std::string> out;
        for (const auto& f : fs::directory_iterator(dir_))
            if (f.is_regular_file() && f.path().extension() == ".ndjson")
                out.push_back(f.path().stem().string());
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static void drop_torn_tail(const fs::path& path)
    {
        if (!fs::exists(path) || fs::file_size(path) == 0)
            return;
        {
            std::ifstream in(path, std::ios::binary);
            in.seekg(-1, std::ios::end);
            if (in.get() == '\n')
                return;
        }
        const std::string text = detail::read_file(path);
        if (text.back() == '\n')
            return;
        const auto keep = text.rfind('\n');
        fs::resize_file(path, keep == std::string::npos ? 0 : keep + 1);
    }

    fs::path dir_;
};

} // namespace ceckd::ingest

#endif // CECKD_INGEST_NARRATIVE_LOG_HPP
