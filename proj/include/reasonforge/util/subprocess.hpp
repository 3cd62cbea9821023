#pragma once

#include <fcntl.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "reasonforge/util/fs.hpp"

namespace forge {

struct RunLimits {
    double wall_timeout_s = 10.0;
    std::uint64_t memory_bytes = 0;  // 0 = no address-space limit
    std::uint64_t max_output_bytes = 8ull * 1024 * 1024;
};

struct RunResult {
    bool spawn_failed = false;
    std::string spawn_error;
    bool exited = false;     // terminated via exit(), exit_code valid
    int exit_code = -1;
    int term_signal = 0;     // nonzero when killed by a signal
    bool timed_out = false;
    bool output_limited = false;
    double wall_time_s = 0.0;
    std::string out;
    std::string err;

    bool ok() const { return !spawn_failed && exited && exit_code == 0 && !timed_out && !output_limited; }
};

namespace detail {

inline std::string read_capped(const std::filesystem::path& p, std::uint64_t cap) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    std::string data;
    data.resize(cap);
    in.read(data.data(), static_cast<std::streamsize>(cap));
    data.resize(static_cast<std::size_t>(in.gcount()));
    return data;
}

}  // namespace detail

// Runs argv in workdir with stdin fed from a file, stdout/stderr captured to
// files, a wall-clock timeout, an optional address-space limit, and an output
// cap enforced both by RLIMIT_FSIZE in the child and by polling in the
// parent. The whole process group is killed on violation.
inline RunResult run_process(const std::vector<std::string>& argv,
                             const std::filesystem::path& workdir,
                             std::string_view stdin_data,
                             const RunLimits& limits) {
    RunResult res;
    if (argv.empty()) {
        res.spawn_failed = true;
        res.spawn_error = "empty argv";
        return res;
    }

    const auto in_path = workdir / ".forge_stdin";
    const auto out_path = workdir / ".forge_stdout";
    const auto err_path = workdir / ".forge_stderr";
    try {
        write_file(in_path.string(), stdin_data);
        write_file(out_path.string(), "");
        write_file(err_path.string(), "");
    } catch (const std::exception& e) {
        res.spawn_failed = true;
        res.spawn_error = e.what();
        return res;
    }

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    const auto start = std::chrono::steady_clock::now();
    pid_t pid = ::fork();
    if (pid < 0) {
        res.spawn_failed = true;
        res.spawn_error = std::strerror(errno);
        return res;
    }

    if (pid == 0) {
        ::setsid();
        struct rlimit rl;
        rl.rlim_cur = rl.rlim_max = 0;
        ::setrlimit(RLIMIT_CORE, &rl);
        if (limits.memory_bytes > 0) {
            rl.rlim_cur = rl.rlim_max = limits.memory_bytes;
            ::setrlimit(RLIMIT_AS, &rl);
        }
        if (limits.max_output_bytes > 0) {
            rl.rlim_cur = rl.rlim_max = limits.max_output_bytes;
            ::setrlimit(RLIMIT_FSIZE, &rl);
        }
        // hard CPU backstop behind the parent's wall-clock poll
        rl.rlim_cur = rl.rlim_max =
            static_cast<rlim_t>(std::ceil(limits.wall_timeout_s)) + 2;
        ::setrlimit(RLIMIT_CPU, &rl);

        if (::chdir(workdir.c_str()) != 0) ::_exit(125);
        int in_fd = ::open(".forge_stdin", O_RDONLY);
        int out_fd = ::open(".forge_stdout", O_WRONLY | O_TRUNC);
        int err_fd = ::open(".forge_stderr", O_WRONLY | O_TRUNC);
        if (in_fd < 0 || out_fd < 0 || err_fd < 0) ::_exit(125);
        ::dup2(in_fd, 0);
        ::dup2(out_fd, 1);
        ::dup2(err_fd, 2);
        if (in_fd > 2) ::close(in_fd);
        if (out_fd > 2) ::close(out_fd);
        if (err_fd > 2) ::close(err_fd);
        ::signal(SIGXFSZ, SIG_DFL);
        ::execvp(cargv[0], cargv.data());
        ::_exit(127);
    }

    const double poll_floor_s = 0.001;
    double poll_s = poll_floor_s;
    int status = 0;
    bool reaped = false;
    for (;;) {
        pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            reaped = true;
            break;
        }
        if (r < 0 && errno != EINTR) break;

        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::error_code ec;
        const auto out_size = std::filesystem::file_size(out_path, ec);
        if (!ec && limits.max_output_bytes > 0 && out_size >= limits.max_output_bytes) {
            res.output_limited = true;
            ::kill(-pid, SIGKILL);
        } else if (elapsed >= limits.wall_timeout_s) {
            res.timed_out = true;
            ::kill(-pid, SIGKILL);
        }
        if (res.timed_out || res.output_limited) {
            ::waitpid(pid, &status, 0);
            reaped = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(poll_s));
        poll_s = std::min(poll_s * 1.5, 0.02);
    }
    ::kill(-pid, SIGKILL);  // sweep stray grandchildren in the group

    res.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (reaped) {
        if (WIFEXITED(status)) {
            res.exited = true;
            res.exit_code = WEXITSTATUS(status);
        } else if (WIFSIGNALED(status)) {
            res.term_signal = WTERMSIG(status);
        }
    }

    res.out = detail::read_capped(out_path, limits.max_output_bytes ? limits.max_output_bytes
                                                                    : 8ull * 1024 * 1024);
    res.err = detail::read_capped(err_path, 64 * 1024);
    // The file-size rlimit guarantees stdout never exceeds the cap, so a file
    // sitting at the cap is the violation signal. Checking after the wait
    // also covers runtimes that ignore SIGXFSZ and exit on EFBIG faster than
    // the poll loop can observe them.
    if (!res.output_limited && limits.max_output_bytes > 0) {
        std::error_code ec;
        const auto final_size = std::filesystem::file_size(out_path, ec);
        if (!ec && final_size >= limits.max_output_bytes) res.output_limited = true;
    }
    if (!res.output_limited && res.term_signal == SIGXFSZ) res.output_limited = true;
    if (res.exited && res.exit_code == 127 && res.err.empty()) {
        res.spawn_failed = true;
        res.spawn_error = "exec failed: " + argv[0];
    }
    return res;
}

}  // namespace forge
