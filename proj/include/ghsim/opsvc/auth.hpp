#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

namespace ghsim::ops {

inline std::string to_hex(const std::vector<unsigned char>& bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) out += fmt::format("{:02x}", b);
  return out;
}

inline std::optional<std::vector<unsigned char>> from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  std::vector<unsigned char> out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    unsigned v = 0;
    for (std::size_t j = i; j < i + 2; ++j) {
      const char c = hex[j];
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
      else return std::nullopt;
    }
    out.push_back(static_cast<unsigned char>(v));
  }
  return out;
}

inline std::vector<unsigned char> random_bytes(std::size_t n) {
  std::vector<unsigned char> out(n);
  if (RAND_bytes(out.data(), static_cast<int>(n)) != 1) throw std::runtime_error("RAND_bytes failed");
  return out;
}

inline std::vector<unsigned char> pbkdf2_sha256(const std::string& password, const std::vector<unsigned char>& salt,
                                                int iterations) {
  std::vector<unsigned char> out(32);
  if (PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), salt.data(), static_cast<int>(salt.size()),
                        iterations, EVP_sha256(), static_cast<int>(out.size()), out.data()) != 1)
    throw std::runtime_error("PBKDF2 failed");
  return out;
}

/// One line of the user file: `name:iterations:salt-hex:hash-hex`.
struct UserRecord {
  std::string name;
  int iterations = 60000;
  std::vector<unsigned char> salt;
  std::vector<unsigned char> hash;

  static UserRecord create(const std::string& name, const std::string& password, int iterations = 60000) {
    if (name.empty() || name.find(':') != std::string::npos) throw std::invalid_argument("bad user name");
    UserRecord r{name, iterations, random_bytes(16), {}};
    r.hash = pbkdf2_sha256(password, r.salt, iterations);
    return r;
  }

  bool verify(const std::string& password) const {
    const auto h = pbkdf2_sha256(password, salt, iterations);
    return h.size() == hash.size() && CRYPTO_memcmp(h.data(), hash.data(), h.size()) == 0;
  }

  std::string to_line() const { return fmt::format("{}:{}:{}:{}", name, iterations, to_hex(salt), to_hex(hash)); }

  static std::optional<UserRecord> from_line(const std::string& line) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(part);
    if (parts.size() != 4 || parts[0].empty()) return std::nullopt;
    UserRecord r;
    r.name = parts[0];
    try {
      r.iterations = std::stoi(parts[1]);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    auto salt = from_hex(parts[2]);
    auto hash = from_hex(parts[3]);
    if (!salt || !hash || r.iterations <= 0) return std::nullopt;
    r.salt = std::move(*salt);
    r.hash = std::move(*hash);
    return r;
  }
};

class UserStore {
 public:
  void add(UserRecord r) { users_[r.name] = std::move(r); }
  const UserRecord* find(const std::string& name) const {
    const auto it = users_.find(name);
    return it == users_.end() ? nullptr : &it->second;
  }
  std::size_t size() const { return users_.size(); }

  static UserStore load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open user file '" + path + "'");
    UserStore s;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty() || line[0] == '#') continue;
      auto r = UserRecord::from_line(line);
      if (!r) throw std::runtime_error(fmt::format("{}:{}: malformed user entry", path, n));
      s.add(std::move(*r));
    }
    return s;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write user file '" + path + "'");
    for (const auto& [name, r] : users_) out << r.to_line() << '\n';
  }

 private:
  std::map<std::string, UserRecord> users_;
};

enum class LoginStatus { Ok, BadCredentials, Throttled };

struct LoginResult {
  LoginStatus status = LoginStatus::BadCredentials;
  std::string token;
  std::chrono::system_clock::time_point expires;
};

struct Session {
  std::string user;
  std::string role = "operator";
  std::chrono::system_clock::time_point expires;
};

/// Password login, bearer tokens and per-user failure throttling.
class Authenticator {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  static constexpr int kMaxFailuresPerWindow = 5;
  static constexpr std::chrono::seconds kFailureWindow{60};
  static constexpr std::chrono::hours kTokenLifetime{24};

  explicit Authenticator(UserStore users, Clock clock = [] { return std::chrono::system_clock::now(); })
      : users_(std::move(users)), clock_(std::move(clock)) {}

  LoginResult login(const std::string& user, const std::string& password) {
    const auto now = clock_();
    {
      std::lock_guard lock(mu_);
      auto& fails = failures_[user];
      while (!fails.empty() && now - fails.front() >= kFailureWindow) fails.pop_front();
      if (static_cast<int>(fails.size()) >= kMaxFailuresPerWindow) return {LoginStatus::Throttled, {}, {}};
    }
    const UserRecord* rec = users_.find(user);
    const bool ok = rec && rec->verify(password);
    std::lock_guard lock(mu_);
    if (!ok) {
      failures_[user].push_back(now);
      return {LoginStatus::BadCredentials, {}, {}};
    }
    failures_.erase(user);
    std::string token = to_hex(random_bytes(16));
    const auto expires = now + kTokenLifetime;
    sessions_[token] = Session{user, "operator", expires};
    return {LoginStatus::Ok, token, expires};
  }

  /// The session behind `token`, if it exists and has not expired.
  std::optional<Session> authorize(const std::string& token) {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(token);
    if (it == sessions_.end()) return std::nullopt;
    if (clock_() >= it->second.expires) {
      sessions_.erase(it);
      return std::nullopt;
    }
    return it->second;
  }

  void logout(const std::string& token) {
    std::lock_guard lock(mu_);
    sessions_.erase(token);
  }

 private:
  UserStore users_;
  Clock clock_;
  std::mutex mu_;
  std::map<std::string, std::deque<std::chrono::system_clock::time_point>> failures_;
  std::map<std::string, Session> sessions_;
};

}  // namespace ghsim::ops
