// Copyright 2026 The Strata Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STRATA_SERIALIZE_H_
#define STRATA_SERIALIZE_H_

// Serializes the compile-time fragment of a staged query into the flat byte
// buffer its generated reader will consume.  The walk mirrors type inference
// instance for instance: the same compile-time subqueries are evaluated under
// the same binder environments, and every width, header elision, and index
// geometry decision is taken from the inferred layout type, so the bytes and
// the type can never disagree.
//
// Hash index nodes store a perfect displacement table: keys are grouped into
// buckets by a seed-0 hash, then per-bucket seeds are searched (largest
// bucket first) until every key lands in a distinct slot of a table with one
// slot per key.  Probing therefore needs exactly two hash evaluations and one
// stored-key comparison; a miss is detected by that comparison, not by empty
// slots.  Ordered index nodes store their keys sorted strictly ascending and
// are searched by binary search; the serializer rejects unsorted input rather
// than sorting, since key order is part of the query's meaning.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "strata/ast.hpp"
#include "strata/catalog.hpp"
#include "strata/layout_type.hpp"

namespace strata {

struct SerializedLayout {
  std::vector<uint8_t> bytes;
  // Absolute start offset of the first serialized instance of each node,
  // keyed by path string.  Nodes under an index or list value side occur many
  // times; only the first occurrence is recorded.  A testing and debugging
  // aid — readers navigate by headers, not by this map.
  std::map<std::string, int64_t> first_offset;
};

// Displacement-seed attempts per bucket before the build fails.
inline constexpr uint32_t kMaxSeedAttempts = 1'000'000;

// Slot index of a hashed key: clears the sign bit before the modulo so the
// result is non-negative, exactly as the emitted reader computes it.
int64_t hash_slot(uint64_t hash, int64_t modulus);

// Serializes the compile-time fragment of `q` over `db`, laying every node
// out as `typed` (normally infer_type(q, db)) prescribes.  Throws Error when
// the data does not fit the type: a width overflow, an elided header whose
// actual value varies, a null in a serialized position, duplicate hash-index
// keys, unsorted ordered-index keys, or a failed seed search.
SerializedLayout serialize(const QueryPtr& q, const Database& db,
                           const TypedLayout& typed);

}  // namespace strata

#endif  // STRATA_SERIALIZE_H_
