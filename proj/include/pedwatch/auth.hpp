#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <absl/time/clock.h>
#include <absl/time/time.h>

namespace pedwatch {

enum class Role { reviewer, admin };

std::string_view to_string(Role r) noexcept;
std::optional<Role> role_from_string(std::string_view s) noexcept;

/// Salted argon2id hash in libsodium's string format; the plaintext is
/// never stored.
struct UserCredential {
  std::string user;
  std::string password_hash;
  Role role = Role::reviewer;
};

std::string hash_password(const std::string& password);

/// Users file: one JSON object per line, {"user","hash","role"}.
class UserDb {
 public:
  static UserDb load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  /// Adds or replaces `user`.
  void upsert(const std::string& user, const std::string& password, Role role);
  const UserCredential* find(const std::string& user) const noexcept;
  /// Verifies in time independent of whether `user` exists.
  std::optional<Role> verify(const std::string& user, const std::string& password) const;

  std::size_t size() const noexcept { return users_.size(); }

 private:
  std::vector<UserCredential> users_;
};

struct TokenInfo {
  std::string user;
  Role role = Role::reviewer;
  absl::Time expires;
};

/// Opaque random bearer tokens with expiry.
class TokenStore {
 public:
  using Clock = std::function<absl::Time()>;

  explicit TokenStore(absl::Duration ttl = absl::Hours(12), Clock clock = absl::Now);

  std::string issue(const std::string& user, Role role);
  /// Returns the token's owner, or nullopt when unknown or expired.
  std::optional<TokenInfo> check(const std::string& token);
  absl::Duration ttl() const noexcept { return ttl_; }

 private:
  absl::Duration ttl_;
  Clock clock_;
  std::mutex mu_;
  std::map<std::string, TokenInfo> tokens_;
};

}  // namespace pedwatch
