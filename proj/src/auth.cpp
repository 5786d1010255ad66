#include "pedwatch/auth.hpp"

#include <sodium.h>

#include <fstream>

#include "pedwatch/error.hpp"
#include "pedwatch/json.hpp"
#include "pedwatch/store.hpp"

namespace pedwatch {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw Error("libsodium initialisation failed");
}

// Hash checked for unknown users so the response time does not reveal
// whether an account exists.
const std::string& dummy_hash() {
  static const std::string h = hash_password("pedwatch-dummy-password");
  return h;
}

}  // namespace

std::string_view to_string(Role r) noexcept { return r == Role::admin ? "admin" : "reviewer"; }

std::optional<Role> role_from_string(std::string_view s) noexcept {
  if (s == "reviewer") return Role::reviewer;
  if (s == "admin") return Role::admin;
  return std::nullopt;
}

std::string hash_password(const std::string& password) {
  ensure_sodium();
  char out[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str(out, password.data(), password.size(), crypto_pwhash_OPSLIMIT_INTERACTIVE,
                        crypto_pwhash_MEMLIMIT_INTERACTIVE) != 0) {
    throw Error("password hashing ran out of memory");
  }
  return out;
}

UserDb UserDb::load(const std::filesystem::path& path) {
  UserDb db;
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot read users file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("user") || !j.contains("hash")) {
      throw ParseError(line_no, "", "users file record needs \"user\" and \"hash\"");
    }
    auto role = role_from_string(j.value("role", std::string("reviewer")));
    if (!role) throw ParseError(line_no, "role", "unknown role");
    db.users_.push_back(UserCredential{j["user"].get<std::string>(), j["hash"].get<std::string>(), *role});
  }
  return db;
}

void UserDb::save(const std::filesystem::path& path) const {
  std::string out;
  for (const UserCredential& u : users_) {
    out += Json{{"user", u.user}, {"hash", u.password_hash}, {"role", to_string(u.role)}}.dump() + "\n";
  }
  write_file(path, out);
}

void UserDb::upsert(const std::string& user, const std::string& password, Role role) {
  if (user.empty()) throw ValidationError("user name must not be empty");
  UserCredential cred{user, hash_password(password), role};
  for (UserCredential& u : users_) {
    if (u.user == user) {
      u = std::move(cred);
      return;
    }
  }
  users_.push_back(std::move(cred));
}

const UserCredential* UserDb::find(const std::string& user) const noexcept {
  for (const UserCredential& u : users_) {
    if (u.user == user) return &u;
  }
  return nullptr;
}

std::optional<Role> UserDb::verify(const std::string& user, const std::string& password) const {
  ensure_sodium();
  const UserCredential* cred = find(user);
  const std::string& hash = cred ? cred->password_hash : dummy_hash();
  const bool ok = crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) == 0;
  if (!cred || !ok) return std::nullopt;
  return cred->role;
}

TokenStore::TokenStore(absl::Duration ttl, Clock clock) : ttl_(ttl), clock_(std::move(clock)) {}

std::string TokenStore::issue(const std::string& user, Role role) {
  ensure_sodium();
  unsigned char raw[32];
  randombytes_buf(raw, sizeof raw);
  char hex[sizeof raw * 2 + 1];
  sodium_bin2hex(hex, sizeof hex, raw, sizeof raw);
  std::lock_guard lock(mu_);
  tokens_[hex] = TokenInfo{user, role, clock_() + ttl_};
  return hex;
}

std::optional<TokenInfo> TokenStore::check(const std::string& token) {
  std::lock_guard lock(mu_);
  auto it = tokens_.find(token);
  if (it == tokens_.end()) return std::nullopt;
  if (clock_() >= it->second.expires) {
    tokens_.erase(it);
    return std::nullopt;
  }
  return it->second;
}

}  // namespace pedwatch
