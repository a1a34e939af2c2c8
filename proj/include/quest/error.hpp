// Copyright 2026 The Quest Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace quest {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Operation not offered by this backend (e.g. next-token tables from a
// remote LM).
class Unsupported : public Error {
 public:
  using Error::Error;
};

// A remote peer answered, but the answer breaks the wire contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// Connection-level failure. Retriable.
class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

class ServerError : public TransportError {
 public:
  ServerError(int status, const std::string& what)
      : TransportError(what), status_(status) {}
  int status() const { return status_; }
  bool retriable() const { return status_ >= 500; }

 private:
  int status_;
};

class EnumerationLimitExceeded : public Error {
 public:
  EnumerationLimitExceeded(double states, double limit);
  double states() const { return states_; }

 private:
  double states_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& message)
      : Error(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace quest
