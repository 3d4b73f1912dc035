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

#ifndef STRATA_LAYOUT_TYPE_H_
#define STRATA_LAYOUT_TYPE_H_

// Interval-annotated layout types.
//
// A layout type abstracts the bytes a serializable query will produce: value
// ranges for scalars, element counts for collections, and content lengths for
// anything variable-sized.  `infer_type` computes it by abstract
// interpretation of the build stage — it evaluates every compile-time
// subquery over the loaded database and folds the observed scalar values and
// collection counts into intervals, joining with `lub` across the instances a
// node takes on under different binder rows.
//
// The intervals drive specialization on both sides of the pipeline:
//
//   * the serializer sizes every integer field with `width_of` (smallest
//     two's-complement width that holds the whole interval) and omits a
//     count/length header entirely when its interval is a single point;
//   * the reader generator bakes the same widths and elisions into the
//     emitted code, so the two never disagree about where a byte lives.
//
// Content lengths are composed interval-arithmetically from child types
// rather than re-measured per instance.  The composition mirrors the
// serializer's actual sums, so concrete sizes always land inside the computed
// interval, and a singleton interval is produced exactly when every
// contributing field is itself constant-size — which is what makes the
// header-elision rule sound.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "strata/ast.hpp"
#include "strata/catalog.hpp"

namespace strata {

// A closed integer range, lo <= hi.  Used for scalar values, fixed-point
// numerators, date day counts, string byte lengths, element counts, and
// content byte lengths.
struct Interval {
  int64_t lo = 0;
  int64_t hi = 0;

  static Interval point(int64_t v) { return Interval{v, v}; }
  static Interval of(int64_t lo, int64_t hi);

  bool singleton() const { return lo == hi; }
  Interval hull(const Interval& o) const {
    return Interval{lo < o.lo ? lo : o.lo, hi > o.hi ? hi : o.hi};
  }

  friend bool operator==(const Interval& a, const Interval& b) {
    return a.lo == b.lo && a.hi == b.hi;
  }
  friend bool operator!=(const Interval& a, const Interval& b) {
    return !(a == b);
  }

  std::string to_string() const;  // "[lo,hi]"
};

// Smallest width in bytes (1..8) whose two's-complement range contains the
// whole interval: [0,100] -> 1, [-200,100] -> 2, [0,2^40] -> 6.
int width_of(const Interval& iv);

enum class LayoutKind : uint8_t {
  kInt,
  kBool,
  kString,
  kFixed,
  kDate,
  kTuple,
  kList,
  kHashIdx,
  kOrderedIdx,
  kEmpty,
};

const char* layout_kind_name(LayoutKind k);

struct LayoutType;
using LayoutTypePtr = std::shared_ptr<const LayoutType>;

// One node of a layout type.  Field use by kind:
//
//   kInt      values = value range; width = width_of(values)
//   kBool     (one byte, 0 or 1)
//   kString   values = byte-length range of the UTF-8 content
//   kFixed    values = numerator range, scale = decimal scale
//   kDate     values = day-count range (same machinery as kInt)
//   kTuple    tuple_kind, children
//   kList     elem, count = element-count range
//   kHashIdx  key (a cross tuple of scalar column types), value, count
//   kOrderedIdx  likewise
//   kEmpty    the type of a collection that never held an element (bottom:
//             lub(empty, t) = t); serializes to zero bytes
//
// `byte_len` on every node is the content length range, excluding the node's
// own headers but including those of its children.  `width` (scalars) and
// `off_width` (indexes: bytes per stored value offset, 0 when the value type
// is constant-size and offsets are elided) are derived in the constructors
// and kept consistent by construction — `lub` rebuilds rather than merges
// them.
struct LayoutType {
  LayoutKind kind = LayoutKind::kEmpty;
  Interval values;                     // kInt/kString/kFixed/kDate
  int scale = 0;                       // kFixed
  int width = 0;                       // scalar byte width (derived)
  TupleKind tuple_kind = TupleKind::kCross;  // kTuple
  std::vector<LayoutTypePtr> children;       // kTuple
  LayoutTypePtr elem;                  // kList
  LayoutTypePtr key;                   // kHashIdx/kOrderedIdx
  LayoutTypePtr value;                 // kHashIdx/kOrderedIdx
  Interval count;                      // kList/kHashIdx/kOrderedIdx
  int off_width = 0;                   // kHashIdx/kOrderedIdx (derived)
  Interval byte_len;                   // content bytes (derived)
};

LayoutTypePtr lt_int(Interval values);
LayoutTypePtr lt_bool();
LayoutTypePtr lt_string(Interval byte_length);
LayoutTypePtr lt_fixed(Interval numerators, int scale);
LayoutTypePtr lt_date(Interval days);
LayoutTypePtr lt_tuple(TupleKind kind, std::vector<LayoutTypePtr> children);
LayoutTypePtr lt_list(LayoutTypePtr elem, Interval count);
LayoutTypePtr lt_hash_idx(LayoutTypePtr key, LayoutTypePtr value,
                          Interval count);
LayoutTypePtr lt_ordered_idx(LayoutTypePtr key, LayoutTypePtr value,
                             Interval count);
LayoutTypePtr lt_empty();

// Least upper bound: pointwise interval hull on same-kind types.  Fixed
// scales unify to the larger scale with numerator ranges rescaled; kEmpty is
// the identity.  Throws Error on kind, arity, or tuple-kind mismatches.
LayoutTypePtr lub(const LayoutTypePtr& a, const LayoutTypePtr& b);

bool layout_type_equal(const LayoutTypePtr& a, const LayoutTypePtr& b);

std::string layout_type_to_string(const LayoutTypePtr& t);

// --- Header geometry ---------------------------------------------------------
//
// Serialized form of a node:
//
//   scalars     value bytes at `width`; strings are [len?] ++ content
//   tuple       [len?] ++ child0 ++ child1 ++ ...
//   list        [count?] [len?] ++ elem0 ++ elem1 ++ ...
//   hash index  [count?] [len?] ++ seeds ++ slots ++ value blobs
//   ordered idx [count?] [len?] ++ sorted keys ++ offsets ++ value blobs
//   empty       zero bytes
//
// [x?] denotes a little-endian integer header of width `width_of(interval)`
// that is elided when the interval is a singleton — the reader then uses the
// constant directly.  Offsets stored inside index nodes are relative to the
// start of the node (headers included).

// Width of the element-count header (lists and indexes; 0 when elided or not
// applicable).
int count_header_width(const LayoutTypePtr& t);
// Width of the content-length header (0 when elided or not applicable).
int len_header_width(const LayoutTypePtr& t);
// Total header bytes preceding the node's content.
int header_width(const LayoutTypePtr& t);
// headers + content: the full footprint range of the node.
Interval total_interval(const LayoutTypePtr& t);
// Engaged with the exact footprint when the content length is a singleton
// (headers, if any, have static widths, so the total is constant too).
std::optional<int64_t> const_total_size(const LayoutTypePtr& t);

// --- Index geometry ----------------------------------------------------------

// Bytes per per-bucket seed in a hash index.
inline constexpr int kHashSeedWidth = 4;

// Number of displacement buckets for `entries` keys (average bucket load 4).
int64_t hash_bucket_count(int64_t entries);

// Fixed byte width of one key column inside an index slot: padded to the
// interval's upper bound for strings (plus their length header), the scalar
// width otherwise.
int64_t key_column_slot_width(const LayoutTypePtr& col);
// Fixed byte width of a whole key tuple in a slot (columns back to back, no
// tuple header).
int64_t key_slot_width(const LayoutTypePtr& key);

// --- Inference ---------------------------------------------------------------

// Result of type inference: the root type plus the type of every node of the
// run-time fragment, keyed by path (see path_to_string).  A node that is
// never instantiated (for example the element of an always-empty list) has no
// entry.
struct TypedLayout {
  LayoutTypePtr root;
  std::map<std::string, LayoutTypePtr> by_path;
};

// Abstractly interprets the build stage of `q` over `db`: evaluates each
// compile-time subquery under the binder rows that reach it and joins the
// per-instance types with `lub`.  Requires `q` to pass the staging check
// (parameters are collected from the term).  Throws Error on staging
// violations, on null values in serialized positions, and on incompatible
// instance types.
TypedLayout infer_type(const QueryPtr& q, const Database& db);

// --- Descriptor encoding -----------------------------------------------------

// Compact binary form of a type tree (for the artifact's descriptor
// section).  Derived fields are recomputed on decode, so decode(encode(t))
// is structurally equal to t.
std::vector<uint8_t> encode_layout_type(const LayoutTypePtr& t);
LayoutTypePtr decode_layout_type(const std::vector<uint8_t>& bytes);

}  // namespace strata

#endif  // STRATA_LAYOUT_TYPE_H_
