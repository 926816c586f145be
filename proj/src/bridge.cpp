#include "wmf/bridge.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>

namespace wmf {

using nlohmann::json;

BridgeLM::BridgeLM(const std::string& command, std::uint32_t vocab_size)
    : vocab_size_(vocab_size) {
    int to_pipe[2];
    int from_pipe[2];
    if (pipe(to_pipe) != 0 || pipe(from_pipe) != 0) {
        throw BridgeError("pipe() failed: " + std::string(std::strerror(errno)));
    }
    pid_t pid = fork();
    if (pid < 0) {
        throw BridgeError("fork() failed: " + std::string(std::strerror(errno)));
    }
    if (pid == 0) {
        dup2(to_pipe[0], STDIN_FILENO);
        dup2(from_pipe[1], STDOUT_FILENO);
        close(to_pipe[0]);
        close(to_pipe[1]);
        close(from_pipe[0]);
        close(from_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
        _exit(127);
    }
    close(to_pipe[0]);
    close(from_pipe[1]);
    to_child_ = fdopen(to_pipe[1], "w");
    from_child_ = fdopen(from_pipe[0], "r");
    child_pid_ = pid;
    if (!to_child_ || !from_child_) {
        throw BridgeError("fdopen() failed");
    }
}

BridgeLM::~BridgeLM() {
    if (to_child_) {
        fclose(to_child_);
    }
    if (from_child_) {
        fclose(from_child_);
    }
    if (child_pid_ > 0) {
        int status = 0;
        waitpid(child_pid_, &status, 0);
    }
}

ProbDist BridgeLM::dist_next(std::span<const TokenId> context) const {
    if (context.empty()) {
        throw DomainError("context must be non-empty");
    }
    for (TokenId t : context) {
        if (t >= vocab_size_) {
            throw DomainError("token id " + std::to_string(t) + " out of range");
        }
    }
    std::uint64_t id = next_id_++;
    json req{{"id", id}, {"context", std::vector<TokenId>(context.begin(), context.end())}};
    std::string line = req.dump();
    line.push_back('\n');
    if (fputs(line.c_str(), to_child_) == EOF || fflush(to_child_) != 0) {
        throw BridgeError("failed to write bridge request");
    }

    std::string resp;
    char buf[4096];
    for (;;) {
        if (!fgets(buf, sizeof(buf), from_child_)) {
            throw BridgeError("bridge closed the stream before responding (id " +
                              std::to_string(id) + ")");
        }
        resp += buf;
        if (!resp.empty() && resp.back() == '\n') {
            break;
        }
    }
    return parse_bridge_response(resp, id, vocab_size_);
}

ProbDist parse_bridge_response(const std::string& line, std::uint64_t expect_id,
                               std::uint32_t vocab_size) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw BridgeError(std::string("malformed bridge response: ") + e.what());
    }
    if (!j.contains("id") || j["id"].get<std::uint64_t>() != expect_id) {
        throw BridgeError("bridge response id mismatch (expected " +
                          std::to_string(expect_id) + "): " + line);
    }
    ProbDist dist;
    if (j.contains("probs")) {
        dist.probs = j["probs"].get<std::vector<double>>();
        if (dist.probs.size() != vocab_size) {
            throw BridgeError("bridge probs length " + std::to_string(dist.probs.size()) +
                              " != vocab size " + std::to_string(vocab_size));
        }
    } else if (j.contains("entries")) {
        dist.probs.assign(vocab_size, 0.0);
        for (const auto& e : j["entries"]) {
            auto tok = e.at(0).get<std::uint64_t>();
            if (tok >= vocab_size) {
                throw BridgeError("bridge entry token id out of range");
            }
            dist.probs[tok] = e.at(1).get<double>();
        }
    } else {
        throw BridgeError("bridge response has neither probs nor entries: " + line);
    }
    double sum = 0.0;
    for (double p : dist.probs) {
        if (p < 0.0 || !std::isfinite(p)) {
            throw BridgeError("bridge probability out of range");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw BridgeError("bridge probabilities sum to " + std::to_string(sum) +
                          ", outside the 1e-6 protocol tolerance");
    }
    dist.renormalize();
    return dist;
}

} // namespace wmf
