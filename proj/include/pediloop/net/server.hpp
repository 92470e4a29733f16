#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "pediloop/core/error.hpp"
#include "pediloop/net/session.hpp"

namespace pediloop::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

inline constexpr std::size_t kMaxFrameBytes = 1 << 20;

struct ServerOptions {
    std::string address = "0.0.0.0";
    std::uint16_t port = kDefaultPort;  // 0 picks a free port
    std::optional<std::filesystem::path> static_root;  // served for plain HTTP GETs
};

namespace detail {

inline std::string_view mime_type(const std::filesystem::path& p)
{
    const auto ext = p.extension().string();
    if (ext == ".html") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    return "application/octet-stream";
}

/// One client connection. The first line decides the framing: "GET " starts an
/// HTTP request (WebSocket upgrade on /ws, static files otherwise); anything
/// else is the newline-delimited protocol.
class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, Hub& hub, const ServerOptions& opts, std::atomic<int>& open)
        : socket_(std::move(socket)), hub_(hub), opts_(opts), open_(open)
    {
        ++open_;
    }

    void start()
    {
        auto& ioc = static_cast<asio::io_context&>(socket_.get_executor().context());
        std::weak_ptr<Connection> weak = shared_from_this();
        notify_ = [weak, &ioc] {
            asio::post(ioc, [weak] {
                if (auto self = weak.lock()) self->flush();
            });
        };
        read_first_line();
    }

    void read_first_line()
    {
        auto self = shared_from_this();
        asio::async_read_until(socket_, asio::dynamic_buffer(line_buf_, kMaxFrameBytes), '\n',
                               [self](beast::error_code ec, std::size_t) {
                                   if (ec) return self->close();
                                   if (self->line_buf_.rfind("GET ", 0) == 0) self->start_http();
                                   else self->start_lines();
                               });
    }

    /// Send whatever is still queued, then close. Runs on the I/O thread.
    void shutdown()
    {
        closing_ = true;
        if (!id_) return close();
        if (!writing_) write_next();
    }

private:
    // ---- newline-delimited protocol ----

    void start_lines()
    {
        mode_ = Mode::Lines;
        id_ = hub_.connect(notify_);
        consume_lines();
        read_lines();
    }

    void consume_lines()
    {
        std::size_t nl;
        while ((nl = line_buf_.find('\n')) != std::string::npos) {
            const std::string line = line_buf_.substr(0, nl);
            line_buf_.erase(0, nl + 1);
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            hub_.receive(*id_, line);
        }
    }

    void read_lines()
    {
        auto self = shared_from_this();
        asio::async_read_until(socket_, asio::dynamic_buffer(line_buf_, kMaxFrameBytes), '\n',
                               [self](beast::error_code ec, std::size_t) {
                                   if (ec) return self->close();
                                   self->consume_lines();
                                   self->read_lines();
                               });
    }

    // ---- HTTP / WebSocket ----

    void start_http()
    {
        auto mb = http_buf_.prepare(line_buf_.size());
        asio::buffer_copy(mb, asio::buffer(line_buf_));
        http_buf_.commit(line_buf_.size());
        line_buf_.clear();
        auto self = shared_from_this();
        http::async_read(socket_, http_buf_, request_, [self](beast::error_code ec, std::size_t) {
            if (ec) return self->close();
            self->route();
        });
    }

    void route()
    {
        const std::string target(request_.target());
        if (target == "/ws" || target.rfind("/ws?", 0) == 0) {
            if (!websocket::is_upgrade(request_)) return respond(http::status::bad_request, "text/plain", "WebSocket upgrade required\n");
            mode_ = Mode::WebSocket;
            ws_.emplace(std::move(socket_));
            ws_->set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
            ws_->read_message_max(kMaxFrameBytes);
            auto self = shared_from_this();
            ws_->async_accept(request_, [self](beast::error_code ec) {
                if (ec) return self->close();
                self->id_ = self->hub_.connect(self->notify_);
                self->read_ws();
            });
            return;
        }
        serve_static(target);
    }

    void serve_static(std::string target)
    {
        if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
        if (!opts_.static_root || target.find("..") != std::string::npos || target.empty() || target[0] != '/')
            return respond(http::status::not_found, "text/plain", "not found\n");
        std::filesystem::path p = *opts_.static_root / target.substr(1);
        if (target == "/" || std::filesystem::is_directory(p)) p /= "index.html";
        std::ifstream in(p, std::ios::binary);
        if (!in) return respond(http::status::not_found, "text/plain", "not found\n");
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        respond(http::status::ok, mime_type(p), std::move(body));
    }

    void respond(http::status status, std::string_view type, std::string body)
    {
        auto res = std::make_shared<http::response<http::string_body>>(status, request_.version());
        res->set(http::field::server, "pediloop");
        res->set(http::field::content_type, beast::string_view(type.data(), type.size()));
        res->keep_alive(false);
        res->body() = std::move(body);
        res->prepare_payload();
        auto self = shared_from_this();
        http::async_write(socket_, *res, [self, res](beast::error_code, std::size_t) {
            beast::error_code ignored;
            self->socket_.shutdown(tcp::socket::shutdown_send, ignored);
        });
    }

    void read_ws()
    {
        auto self = shared_from_this();
        ws_->async_read(ws_buf_, [self](beast::error_code ec, std::size_t) {
            if (ec) return self->close();
            const auto text = beast::buffers_to_string(self->ws_buf_.data());
            self->ws_buf_.consume(self->ws_buf_.size());
            self->hub_.receive(*self->id_, text);
            self->read_ws();
        });
    }

    // ---- outbound ----

    // Frames stay in the hub's bounded queue until the socket is ready for them.
    void flush()
    {
        if (closed_ || !id_ || writing_) return;
        write_next();
    }

    void write_next()
    {
        if (!closed_ && pending_.empty())
            for (auto& f : hub_.take_outgoing(*id_)) pending_.push_back(std::move(f));
        if (closed_ || pending_.empty()) {
            writing_ = false;
            if (closing_) close();
            return;
        }
        writing_ = true;
        auto frame = pending_.front();
        pending_.pop_front();
        auto self = shared_from_this();
        auto on_done = [self, frame](beast::error_code ec, std::size_t) {
            if (ec) return self->close();
            self->write_next();
        };
        if (mode_ == Mode::WebSocket) {
            ws_->text(true);
            // Frames are stored newline-terminated; a WebSocket frame carries the bare JSON.
            ws_->async_write(asio::buffer(frame->data(), frame->size() - 1), on_done);
        } else {
            asio::async_write(socket_, asio::buffer(*frame), on_done);
        }
    }

    void close()
    {
        if (closed_) return;
        closed_ = true;
        --open_;
        if (id_) hub_.disconnect(*id_);
        beast::error_code ignored;
        if (ws_) beast::get_lowest_layer(*ws_).close(ignored);
        else socket_.close(ignored);
    }

    enum class Mode { Unknown, Lines, WebSocket };

    tcp::socket socket_;
    Hub& hub_;
    const ServerOptions& opts_;
    std::atomic<int>& open_;
    Mode mode_ = Mode::Unknown;
    std::optional<SessionId> id_;
    Hub::Notify notify_;
    std::string line_buf_;
    beast::flat_buffer http_buf_;
    http::request<http::string_body> request_;
    std::optional<websocket::stream<tcp::socket>> ws_;
    beast::flat_buffer ws_buf_;
    std::deque<std::shared_ptr<const std::string>> pending_;
    bool writing_ = false;
    bool closing_ = false;
    bool closed_ = false;
};

} // namespace detail

/// TCP listener on one I/O thread. All game-state effects go through the Hub.
class Server {
public:
    Server(Hub& hub, ServerOptions opts) : hub_(hub), opts_(std::move(opts)), acceptor_(ioc_) {}

    ~Server() { stop(); }

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Bind and start serving. Throws ConfigError when the port cannot be bound.
    void start()
    {
        beast::error_code ec;
        const auto addr = asio::ip::make_address(opts_.address, ec);
        if (ec) throw ConfigError("invalid listen address '" + opts_.address + "'");
        const tcp::endpoint ep{addr, opts_.port};
        acceptor_.open(ep.protocol(), ec);
        if (!ec) acceptor_.set_option(asio::socket_base::reuse_address(true), ec);
        if (!ec) acceptor_.bind(ep, ec);
        if (!ec) acceptor_.listen(asio::socket_base::max_listen_connections, ec);
        if (ec) throw ConfigError("cannot listen on " + opts_.address + ":" + std::to_string(opts_.port) + ": " + ec.message());
        port_ = acceptor_.local_endpoint().port();
        accept();
        thread_ = std::thread([this] { ioc_.run(); });
    }

    /// Flush queued frames to every client (bounded by `grace`), then close.
    void stop(std::chrono::milliseconds grace = std::chrono::milliseconds(500))
    {
        if (!thread_.joinable()) return;
        asio::post(ioc_, [this] {
            beast::error_code ignored;
            acceptor_.close(ignored);
            for (auto& weak : connections_)
                if (auto c = weak.lock()) c->shutdown();
            connections_.clear();
        });
        const auto until = std::chrono::steady_clock::now() + grace;
        while (open_.load() > 0 && std::chrono::steady_clock::now() < until)
            std::this_thread::sleep_for(std::chrono::milliseconds(1));
        ioc_.stop();
        thread_.join();
    }

    std::uint16_t port() const noexcept { return port_; }

private:
    void accept()
    {
        acceptor_.async_accept([this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;  // acceptor closed
            socket.set_option(tcp::no_delay(true), ec);
            auto c = std::make_shared<detail::Connection>(std::move(socket), hub_, opts_, open_);
            std::erase_if(connections_, [](const auto& w) { return w.expired(); });
            connections_.push_back(c);
            c->start();
            accept();
        });
    }

    Hub& hub_;
    ServerOptions opts_;
    asio::io_context ioc_;
    tcp::acceptor acceptor_;
    std::thread thread_;
    std::uint16_t port_ = 0;
    std::atomic<int> open_{0};
    std::vector<std::weak_ptr<detail::Connection>> connections_;  // I/O thread only
};

} // namespace pediloop::net
