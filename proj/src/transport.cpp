#include "qnet/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

namespace qnet::netharness {

namespace {

struct FrameQueue {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::pair<std::chrono::steady_clock::time_point, std::vector<std::uint8_t>>> frames;
    bool closed = false;

    void push(std::vector<std::uint8_t> frame, std::chrono::milliseconds latency) {
        {
            std::lock_guard lock(mu);
            frames.emplace_back(std::chrono::steady_clock::now() + latency, std::move(frame));
        }
        cv.notify_all();
    }

    std::vector<std::uint8_t> pop(std::chrono::milliseconds timeout) {
        std::unique_lock lock(mu);
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            const auto now = std::chrono::steady_clock::now();
            if (!frames.empty() && frames.front().first <= now) {
                auto frame = std::move(frames.front().second);
                frames.pop_front();
                return frame;
            }
            if (frames.empty() && closed) throw TransportClosed("peer closed");
            if (now >= deadline) throw TransportTimeout("recv timeout");
            auto wake = deadline;
            if (!frames.empty()) wake = std::min(wake, frames.front().first);
            cv.wait_until(lock, wake);
        }
    }

    void close() {
        {
            std::lock_guard lock(mu);
            closed = true;
        }
        cv.notify_all();
    }
};

class InprocEndpoint final : public Transport {
public:
    InprocEndpoint(std::shared_ptr<FrameQueue> inbox, std::shared_ptr<FrameQueue> outbox,
                   std::chrono::milliseconds latency, DropFilter drop)
        : inbox_(std::move(inbox)), outbox_(std::move(outbox)), latency_(latency), drop_(std::move(drop)) {}

    ~InprocEndpoint() override { outbox_->close(); }

    void send(std::vector<std::uint8_t> frame) override {
        if (drop_ && drop_(frame)) return;
        outbox_->push(std::move(frame), latency_);
    }

    std::vector<std::uint8_t> recv(std::chrono::milliseconds timeout) override {
        return inbox_->pop(timeout);
    }

private:
    std::shared_ptr<FrameQueue> inbox_;
    std::shared_ptr<FrameQueue> outbox_;
    std::chrono::milliseconds latency_;
    DropFilter drop_;
};

class SocketEndpoint final : public Transport {
public:
    explicit SocketEndpoint(int fd) : fd_(fd), inbox_(std::make_shared<FrameQueue>()) {
        reader_ = std::thread([this] { this->read_loop(); });
    }

    ~SocketEndpoint() override {
        ::shutdown(fd_, SHUT_RDWR);
        if (reader_.joinable()) reader_.join();
        ::close(fd_);
    }

    void send(std::vector<std::uint8_t> frame) override {
        std::uint32_t len = static_cast<std::uint32_t>(frame.size());
        write_all(reinterpret_cast<const std::uint8_t*>(&len), 4);
        write_all(frame.data(), frame.size());
    }

    std::vector<std::uint8_t> recv(std::chrono::milliseconds timeout) override {
        return inbox_->pop(timeout);
    }

private:
    void write_all(const std::uint8_t* p, std::size_t n) {
        while (n > 0) {
            const ssize_t w = ::send(fd_, p, n, MSG_NOSIGNAL);
            if (w <= 0) throw TransportClosed("socket send failed");
            p += w;
            n -= static_cast<std::size_t>(w);
        }
    }

    bool read_all(std::uint8_t* p, std::size_t n) {
        while (n > 0) {
            const ssize_t r = ::recv(fd_, p, n, 0);
            if (r <= 0) return false;
            p += r;
            n -= static_cast<std::size_t>(r);
        }
        return true;
    }

    void read_loop() {
        while (true) {
            std::uint32_t len = 0;
            if (!read_all(reinterpret_cast<std::uint8_t*>(&len), 4)) break;
            std::vector<std::uint8_t> frame(len);
            if (!read_all(frame.data(), len)) break;
            inbox_->push(std::move(frame), std::chrono::milliseconds{0});
        }
        inbox_->close();
    }

    int fd_;
    std::shared_ptr<FrameQueue> inbox_;
    std::thread reader_;
};

}  // namespace

namespace {

TransportPair make_inproc(std::chrono::milliseconds latency, DropFilter drop_a2b,
                          DropFilter drop_b2a) {
    auto a_to_b = std::make_shared<FrameQueue>();
    auto b_to_a = std::make_shared<FrameQueue>();
    TransportPair pair;
    pair.alice = std::make_unique<InprocEndpoint>(b_to_a, a_to_b, latency, std::move(drop_a2b));
    pair.bob = std::make_unique<InprocEndpoint>(a_to_b, b_to_a, latency, std::move(drop_b2a));
    return pair;
}

}  // namespace

TransportPair make_inproc_pair(std::chrono::milliseconds latency) {
    return make_inproc(latency, nullptr, nullptr);
}

TransportPair make_inproc_pair_with_faults(DropFilter drop_alice_to_bob,
                                           DropFilter drop_bob_to_alice) {
    return make_inproc(std::chrono::milliseconds{0}, std::move(drop_alice_to_bob),
                       std::move(drop_bob_to_alice));
}

TransportPair make_loopback_socket_pair() {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw TransportError("socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;  // ephemeral
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listener);
        throw TransportError("bind() failed");
    }
    socklen_t addr_len = sizeof(addr);
    ::getsockname(listener, reinterpret_cast<sockaddr*>(&addr), &addr_len);
    if (::listen(listener, 1) != 0) {
        ::close(listener);
        throw TransportError("listen() failed");
    }

    const int client = ::socket(AF_INET, SOCK_STREAM, 0);
    if (client < 0) {
        ::close(listener);
        throw TransportError("socket() failed");
    }
    if (::connect(client, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        ::close(listener);
        ::close(client);
        throw TransportError("connect() failed");
    }
    const int server = ::accept(listener, nullptr, nullptr);
    ::close(listener);
    if (server < 0) {
        ::close(client);
        throw TransportError("accept() failed");
    }
    const int one = 1;
    ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    ::setsockopt(server, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

    TransportPair pair;
    pair.alice = std::make_unique<SocketEndpoint>(client);
    pair.bob = std::make_unique<SocketEndpoint>(server);
    return pair;
}

}  // namespace qnet::netharness
