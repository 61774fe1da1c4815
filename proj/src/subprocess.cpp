#include "ginnlp/subprocess.hpp"

#include <array>
#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ginnlp/errors.hpp"

namespace ginnlp {

namespace {

    struct Pipe {
        int fd[2] { -1, -1 };
        Pipe()
        {
            if (::pipe(fd) != 0) {
                throw Error(std::string("pipe failed: ") + std::strerror(errno));
            }
        }
        ~Pipe()
        {
            close_read();
            close_write();
        }
        Pipe(const Pipe&) = delete;
        Pipe& operator=(const Pipe&) = delete;

        void close_read()
        {
            if (fd[0] >= 0) {
                ::close(fd[0]);
                fd[0] = -1;
            }
        }
        void close_write()
        {
            if (fd[1] >= 0) {
                ::close(fd[1]);
                fd[1] = -1;
            }
        }
    };

} // namespace

ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout,
                        const std::filesystem::path& working_dir)
{
    Pipe out;
    Pipe err;

    const pid_t pid = ::fork();
    if (pid < 0) {
        throw Error(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(out.fd[1], STDOUT_FILENO);
        ::dup2(err.fd[1], STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
        }
        ::close(out.fd[0]);
        ::close(err.fd[0]);
        if (!working_dir.empty() && ::chdir(working_dir.c_str()) != 0) {
            ::_exit(127);
        }
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    out.close_write();
    err.close_write();

    ProcessResult result;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::array<char, 4096> buf {};
    std::array<pollfd, 2> fds { { { out.fd[0], POLLIN, 0 }, { err.fd[0], POLLIN, 0 } } };
    int open_streams = 2;

    while (open_streams > 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            result.timed_out = true;
            break;
        }
        const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
        if (rc < 0) {
            if (errno == EINTR) {
                continue;
            }
            break;
        }
        for (std::size_t k = 0; k < fds.size(); ++k) {
            if (fds[k].fd < 0 || (fds[k].revents & (POLLIN | POLLHUP | POLLERR)) == 0) {
                continue;
            }
            const ssize_t n = ::read(fds[k].fd, buf.data(), buf.size());
            if (n > 0) {
                (k == 0 ? result.out : result.err).append(buf.data(), static_cast<std::size_t>(n));
            } else {
                fds[k].fd = -1;
                --open_streams;
            }
        }
    }

    if (result.timed_out) {
        ::kill(-pid, SIGKILL);
    }
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

} // namespace ginnlp
