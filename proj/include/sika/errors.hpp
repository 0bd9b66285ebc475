#pragma once

#include <stdexcept>
#include <string>

namespace sika {

// Caller violated a precondition (bad lengths, bad parameters, unknown labels).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Problems with a party's own input data (duplicates, too many records).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AuthFailure : public std::runtime_error {
 public:
  AuthFailure() : std::runtime_error("authenticated decryption failed") {}
};

class EncodeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientShares : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unexpected protocol messages; always aborts the session.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SessionTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A peer broadcast ABORT.
class SessionAborted : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

}  // namespace sika
