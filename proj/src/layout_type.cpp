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

#include "strata/layout_type.hpp"

#include <cstring>
#include <sstream>

#include "strata/interp.hpp"
#include "strata/schema.hpp"

namespace strata {

namespace {

LayoutTypePtr finish(LayoutType t) {
  return std::make_shared<const LayoutType>(std::move(t));
}

Interval isum(const Interval& a, const Interval& b) {
  return Interval{a.lo + b.lo, a.hi + b.hi};
}

// count * per for non-negative intervals (sizes and counts).
Interval iscale(const Interval& count, const Interval& per) {
  return Interval{count.lo * per.lo, count.hi * per.hi};
}

}  // namespace

Interval Interval::of(int64_t lo, int64_t hi) {
  if (lo > hi) {
    throw Error("malformed interval [" + std::to_string(lo) + "," +
                std::to_string(hi) + "]");
  }
  return Interval{lo, hi};
}

std::string Interval::to_string() const {
  return "[" + std::to_string(lo) + "," + std::to_string(hi) + "]";
}

int width_of(const Interval& iv) {
  for (int w = 1; w < 8; ++w) {
    int64_t hi = (int64_t{1} << (8 * w - 1)) - 1;
    int64_t lo = -hi - 1;
    if (iv.lo >= lo && iv.hi <= hi) return w;
  }
  return 8;
}

const char* layout_kind_name(LayoutKind k) {
  switch (k) {
    case LayoutKind::kInt: return "int";
    case LayoutKind::kBool: return "bool";
    case LayoutKind::kString: return "string";
    case LayoutKind::kFixed: return "fixed";
    case LayoutKind::kDate: return "date";
    case LayoutKind::kTuple: return "tuple";
    case LayoutKind::kList: return "list";
    case LayoutKind::kHashIdx: return "hash_idx";
    case LayoutKind::kOrderedIdx: return "ordered_idx";
    case LayoutKind::kEmpty: return "empty";
  }
  return "?";
}

// --- Constructors ------------------------------------------------------------

LayoutTypePtr lt_int(Interval values) {
  LayoutType t;
  t.kind = LayoutKind::kInt;
  t.values = values;
  t.width = width_of(values);
  t.byte_len = Interval::point(t.width);
  return finish(t);
}

LayoutTypePtr lt_bool() {
  LayoutType t;
  t.kind = LayoutKind::kBool;
  t.width = 1;
  t.byte_len = Interval::point(1);
  return finish(t);
}

LayoutTypePtr lt_string(Interval byte_length) {
  if (byte_length.lo < 0) throw Error("negative string length interval");
  LayoutType t;
  t.kind = LayoutKind::kString;
  t.values = byte_length;
  t.byte_len = byte_length;
  return finish(t);
}

LayoutTypePtr lt_fixed(Interval numerators, int scale) {
  if (scale < 0 || scale > 9) {
    throw Error("fixed-point scale out of range: " + std::to_string(scale));
  }
  LayoutType t;
  t.kind = LayoutKind::kFixed;
  t.values = numerators;
  t.scale = scale;
  t.width = width_of(numerators);
  t.byte_len = Interval::point(t.width);
  return finish(t);
}

LayoutTypePtr lt_date(Interval days) {
  LayoutType t;
  t.kind = LayoutKind::kDate;
  t.values = days;
  t.width = width_of(days);
  t.byte_len = Interval::point(t.width);
  return finish(t);
}

LayoutTypePtr lt_tuple(TupleKind kind, std::vector<LayoutTypePtr> children) {
  LayoutType t;
  t.kind = LayoutKind::kTuple;
  t.tuple_kind = kind;
  Interval len = Interval::point(0);
  for (const auto& c : children) len = isum(len, total_interval(c));
  t.children = std::move(children);
  t.byte_len = len;
  return finish(t);
}

LayoutTypePtr lt_list(LayoutTypePtr elem, Interval count) {
  if (count.lo < 0) throw Error("negative element count interval");
  LayoutType t;
  t.kind = LayoutKind::kList;
  t.byte_len = iscale(count, total_interval(elem));
  t.elem = std::move(elem);
  t.count = count;
  return finish(t);
}

int64_t hash_bucket_count(int64_t entries) {
  return (entries + 3) / 4;
}

int64_t key_column_slot_width(const LayoutTypePtr& col) {
  switch (col->kind) {
    case LayoutKind::kInt:
    case LayoutKind::kFixed:
    case LayoutKind::kDate:
      return col->width;
    case LayoutKind::kBool:
      return 1;
    case LayoutKind::kString:
      return len_header_width(col) + col->values.hi;
    case LayoutKind::kEmpty:
      return 0;
    default:
      throw Error(std::string("index key columns must be scalar, got ") +
                  layout_kind_name(col->kind));
  }
}

int64_t key_slot_width(const LayoutTypePtr& key) {
  if (key->kind != LayoutKind::kTuple || key->tuple_kind != TupleKind::kCross) {
    throw Error("index key type must be a cross tuple of scalars");
  }
  int64_t total = 0;
  for (const auto& c : key->children) total += key_column_slot_width(c);
  return total;
}

namespace {

// Smallest offset width able to address any byte of the node.  The content
// size depends (mildly) on the offset width itself, so probe widths in
// increasing order; 16 over-approximates the node's own header bytes.
int pick_offset_width(int64_t fixed_hi, int64_t per_entry_offsets) {
  for (int w = 1; w < 8; ++w) {
    int64_t content_hi = fixed_hi + per_entry_offsets * w;
    if (width_of(Interval{0, 16 + content_hi}) <= w) return w;
  }
  return 8;
}

}  // namespace

LayoutTypePtr lt_hash_idx(LayoutTypePtr key, LayoutTypePtr value,
                          Interval count) {
  if (count.lo < 0) throw Error("negative element count interval");
  int64_t slot_key = key_slot_width(key);
  Interval vt = total_interval(value);
  int off_w = 0;
  if (!const_total_size(value)) {
    off_w = pick_offset_width(
        hash_bucket_count(count.hi) * kHashSeedWidth +
            count.hi * slot_key + count.hi * vt.hi,
        count.hi);
  }
  int64_t slot = slot_key + off_w;
  LayoutType t;
  t.kind = LayoutKind::kHashIdx;
  t.key = std::move(key);
  t.value = std::move(value);
  t.count = count;
  t.off_width = off_w;
  t.byte_len = Interval{hash_bucket_count(count.lo) * kHashSeedWidth +
                            count.lo * slot + count.lo * vt.lo,
                        hash_bucket_count(count.hi) * kHashSeedWidth +
                            count.hi * slot + count.hi * vt.hi};
  return finish(t);
}

LayoutTypePtr lt_ordered_idx(LayoutTypePtr key, LayoutTypePtr value,
                             Interval count) {
  if (count.lo < 0) throw Error("negative element count interval");
  int64_t slot_key = key_slot_width(key);
  Interval vt = total_interval(value);
  int off_w = 0;
  if (!const_total_size(value)) {
    off_w = pick_offset_width(count.hi * slot_key + count.hi * vt.hi,
                              count.hi + 1);
  }
  LayoutType t;
  t.kind = LayoutKind::kOrderedIdx;
  t.key = std::move(key);
  t.value = std::move(value);
  t.count = count;
  t.off_width = off_w;
  auto content = [&](int64_t n, int64_t v) {
    int64_t offs = off_w == 0 ? 0 : (n + 1) * off_w;
    return n * slot_key + offs + n * v;
  };
  t.byte_len = Interval{content(count.lo, vt.lo), content(count.hi, vt.hi)};
  return finish(t);
}

LayoutTypePtr lt_empty() {
  LayoutType t;
  t.kind = LayoutKind::kEmpty;
  t.byte_len = Interval::point(0);
  return finish(t);
}

// --- Join --------------------------------------------------------------------

namespace {

// Numerator range of a fixed at `from` scale re-expressed at `to` scale.
Interval rescale(const Interval& iv, int from, int to) {
  int64_t f = 1;
  for (int i = from; i < to; ++i) f *= 10;
  __int128 lo = static_cast<__int128>(iv.lo) * f;
  __int128 hi = static_cast<__int128>(iv.hi) * f;
  if (lo < INT64_MIN || hi > INT64_MAX) {
    throw Error("fixed-point overflow joining layout types");
  }
  return Interval{static_cast<int64_t>(lo), static_cast<int64_t>(hi)};
}

}  // namespace

LayoutTypePtr lub(const LayoutTypePtr& a, const LayoutTypePtr& b) {
  if (a->kind == LayoutKind::kEmpty) return b;
  if (b->kind == LayoutKind::kEmpty) return a;
  if (a->kind != b->kind) {
    throw Error(std::string("incompatible layout types: ") +
                layout_kind_name(a->kind) + " vs " + layout_kind_name(b->kind));
  }
  switch (a->kind) {
    case LayoutKind::kInt:
      return lt_int(a->values.hull(b->values));
    case LayoutKind::kBool:
      return lt_bool();
    case LayoutKind::kString:
      return lt_string(a->values.hull(b->values));
    case LayoutKind::kFixed: {
      int s = std::max(a->scale, b->scale);
      return lt_fixed(rescale(a->values, a->scale, s)
                          .hull(rescale(b->values, b->scale, s)),
                      s);
    }
    case LayoutKind::kDate:
      return lt_date(a->values.hull(b->values));
    case LayoutKind::kTuple: {
      if (a->tuple_kind != b->tuple_kind ||
          a->children.size() != b->children.size()) {
        throw Error("incompatible tuple layout types: " +
                    layout_type_to_string(a) + " vs " +
                    layout_type_to_string(b));
      }
      std::vector<LayoutTypePtr> kids;
      kids.reserve(a->children.size());
      for (size_t i = 0; i < a->children.size(); ++i) {
        kids.push_back(lub(a->children[i], b->children[i]));
      }
      return lt_tuple(a->tuple_kind, std::move(kids));
    }
    case LayoutKind::kList:
      return lt_list(lub(a->elem, b->elem), a->count.hull(b->count));
    case LayoutKind::kHashIdx:
      return lt_hash_idx(lub(a->key, b->key), lub(a->value, b->value),
                         a->count.hull(b->count));
    case LayoutKind::kOrderedIdx:
      return lt_ordered_idx(lub(a->key, b->key), lub(a->value, b->value),
                            a->count.hull(b->count));
    case LayoutKind::kEmpty:
      break;
  }
  throw Error("unreachable layout kind");
}

bool layout_type_equal(const LayoutTypePtr& a, const LayoutTypePtr& b) {
  if (a->kind != b->kind) return false;
  if (a->values != b->values || a->scale != b->scale ||
      a->tuple_kind != b->tuple_kind || a->count != b->count ||
      a->byte_len != b->byte_len) {
    return false;
  }
  if (a->children.size() != b->children.size()) return false;
  for (size_t i = 0; i < a->children.size(); ++i) {
    if (!layout_type_equal(a->children[i], b->children[i])) return false;
  }
  auto sub_equal = [](const LayoutTypePtr& x, const LayoutTypePtr& y) {
    if (!x || !y) return !x && !y;
    return layout_type_equal(x, y);
  };
  return sub_equal(a->elem, b->elem) && sub_equal(a->key, b->key) &&
         sub_equal(a->value, b->value);
}

std::string layout_type_to_string(const LayoutTypePtr& t) {
  std::ostringstream os;
  switch (t->kind) {
    case LayoutKind::kInt:
      os << "int" << t->width << t->values.to_string();
      break;
    case LayoutKind::kBool:
      os << "bool";
      break;
    case LayoutKind::kString:
      os << "string" << t->values.to_string();
      break;
    case LayoutKind::kFixed:
      os << "fixed." << t->scale << t->values.to_string();
      break;
    case LayoutKind::kDate:
      os << "date" << t->values.to_string();
      break;
    case LayoutKind::kEmpty:
      os << "empty";
      break;
    case LayoutKind::kTuple: {
      os << "tuple<" << (t->tuple_kind == TupleKind::kCross ? "cross" : "concat")
         << ">(";
      for (size_t i = 0; i < t->children.size(); ++i) {
        if (i) os << ", ";
        os << layout_type_to_string(t->children[i]);
      }
      os << ")";
      break;
    }
    case LayoutKind::kList:
      os << "list" << t->count.to_string() << "("
         << layout_type_to_string(t->elem) << ")";
      break;
    case LayoutKind::kHashIdx:
      os << "hash_idx" << t->count.to_string() << "("
         << layout_type_to_string(t->key) << " -> "
         << layout_type_to_string(t->value) << ")";
      break;
    case LayoutKind::kOrderedIdx:
      os << "ordered_idx" << t->count.to_string() << "("
         << layout_type_to_string(t->key) << " -> "
         << layout_type_to_string(t->value) << ")";
      break;
  }
  return os.str();
}

// --- Header geometry ---------------------------------------------------------

int count_header_width(const LayoutTypePtr& t) {
  switch (t->kind) {
    case LayoutKind::kList:
    case LayoutKind::kHashIdx:
    case LayoutKind::kOrderedIdx:
      return t->count.singleton() ? 0 : width_of(t->count);
    default:
      return 0;
  }
}

int len_header_width(const LayoutTypePtr& t) {
  switch (t->kind) {
    case LayoutKind::kString:
    case LayoutKind::kTuple:
    case LayoutKind::kList:
    case LayoutKind::kHashIdx:
    case LayoutKind::kOrderedIdx:
      return t->byte_len.singleton() ? 0 : width_of(t->byte_len);
    default:
      return 0;
  }
}

int header_width(const LayoutTypePtr& t) {
  return count_header_width(t) + len_header_width(t);
}

Interval total_interval(const LayoutTypePtr& t) {
  int h = header_width(t);
  return Interval{t->byte_len.lo + h, t->byte_len.hi + h};
}

std::optional<int64_t> const_total_size(const LayoutTypePtr& t) {
  if (!t->byte_len.singleton()) return std::nullopt;
  return header_width(t) + t->byte_len.lo;
}

// --- Inference ---------------------------------------------------------------

namespace {

LayoutTypePtr scalar_type_of(const Value& v, const Path& path) {
  switch (v.kind()) {
    case ValueKind::kNull:
      throw Error("cannot serialize a null value at " + path_to_string(path));
    case ValueKind::kInt:
      return lt_int(Interval::point(v.as_int()));
    case ValueKind::kBool:
      return lt_bool();
    case ValueKind::kString:
      return lt_string(
          Interval::point(static_cast<int64_t>(v.as_string().size())));
    case ValueKind::kFixed:
      return lt_fixed(Interval::point(v.numerator()), v.scale());
    case ValueKind::kDate:
      return lt_date(Interval::point(v.days()));
  }
  throw Error("unreachable value kind");
}

class Inferencer {
 public:
  explicit Inferencer(const Database& db) : base_(db) {}

  // The type of one instance of the node at `path` under compile-time
  // bindings `sigma`; folds the instance into `by_path` as a side effect.
  LayoutTypePtr infer(const QueryPtr& q, const Tuple& sigma, Path& path) {
    LayoutTypePtr t;
    switch (q->kind) {
      case QueryExpr::Kind::kSelect:
      case QueryExpr::Kind::kFilter: {
        // Run-time row operators read their child's bytes and add none.
        path.push_back(0);
        t = infer(q->children[0], sigma, path);
        path.pop_back();
        break;
      }
      case QueryExpr::Kind::kDepJoin: {
        // Both sides serialize once: a run-time binder is invisible to
        // compile-time subterms, so the right side cannot depend on it.
        path.push_back(0);
        LayoutTypePtr l = infer(q->children[0], sigma, path);
        path.back() = 1;
        LayoutTypePtr r = infer(q->children[1], sigma, path);
        path.pop_back();
        t = lt_tuple(TupleKind::kCross, {std::move(l), std::move(r)});
        break;
      }
      case QueryExpr::Kind::kAScalar: {
        Value v = eval_expr(q->scalar.expr, base_.with_sigma(sigma));
        t = scalar_type_of(v, path);
        break;
      }
      case QueryExpr::Kind::kATuple: {
        std::vector<LayoutTypePtr> kids;
        kids.reserve(q->children.size());
        for (size_t i = 0; i < q->children.size(); ++i) {
          path.push_back(static_cast<int>(i));
          kids.push_back(infer(q->children[i], sigma, path));
          path.pop_back();
        }
        t = lt_tuple(q->tuple_kind, std::move(kids));
        break;
      }
      case QueryExpr::Kind::kAList: {
        Relation keys = eval_query(q->children[0], base_.with_sigma(sigma));
        LayoutTypePtr elem = lt_empty();
        path.push_back(1);
        for (const Tuple& row : keys.rows) {
          Tuple inner = Tuple::disjoint_union(sigma, row.scoped(q->scope));
          elem = lub(elem, infer(q->children[1], inner, path));
        }
        path.pop_back();
        t = lt_list(std::move(elem),
                    Interval::point(static_cast<int64_t>(keys.rows.size())));
        break;
      }
      case QueryExpr::Kind::kAHashIdx:
      case QueryExpr::Kind::kAOrderedIdx: {
        Relation keys = eval_query(q->children[0], base_.with_sigma(sigma));
        size_t arity = keys.schema.size();
        check_lookup_arity(q, arity);
        std::vector<LayoutTypePtr> cols(arity, lt_empty());
        LayoutTypePtr value = lt_empty();
        path.push_back(1);
        for (const Tuple& row : keys.rows) {
          for (size_t i = 0; i < arity; ++i) {
            cols[i] = lub(cols[i], scalar_type_of(row.fields()[i].second, path));
          }
          Tuple inner = Tuple::disjoint_union(sigma, row.scoped(q->scope));
          value = lub(value, infer(q->children[1], inner, path));
        }
        path.pop_back();
        LayoutTypePtr key = lt_tuple(TupleKind::kCross, std::move(cols));
        Interval n = Interval::point(static_cast<int64_t>(keys.rows.size()));
        t = q->kind == QueryExpr::Kind::kAHashIdx
                ? lt_hash_idx(std::move(key), std::move(value), n)
                : lt_ordered_idx(std::move(key), std::move(value), n);
        break;
      }
      case QueryExpr::Kind::kAEmpty:
        t = lt_empty();
        break;
      default:
        throw Error(std::string("operator has no serialized form at ") +
                    path_to_string(path));
    }
    record(path, t);
    return t;
  }

  std::map<std::string, LayoutTypePtr> take_by_path() {
    return std::move(by_path_);
  }

 private:
  static void check_lookup_arity(const QueryPtr& q, size_t arity) {
    if (q->kind == QueryExpr::Kind::kAHashIdx) {
      if (q->key_exprs.size() != arity) {
        throw Error("hash index lookup has " +
                    std::to_string(q->key_exprs.size()) +
                    " expressions for a " + std::to_string(arity) +
                    "-column key");
      }
    } else {
      if (q->lo_exprs.size() != arity || q->hi_exprs.size() != arity) {
        throw Error("ordered index bounds must match the " +
                    std::to_string(arity) + "-column key");
      }
    }
  }

  void record(const Path& p, const LayoutTypePtr& t) {
    std::string key = path_to_string(p);
    auto it = by_path_.find(key);
    if (it == by_path_.end()) {
      by_path_.emplace(std::move(key), t);
    } else {
      it->second = lub(it->second, t);
    }
  }

  EvalContext base_;
  std::map<std::string, LayoutTypePtr> by_path_;
};

}  // namespace

TypedLayout infer_type(const QueryPtr& q, const Database& db) {
  check_names(q, db.catalog);
  StagingReport report = stage_check(q, db.catalog);
  if (!report.serializable()) {
    throw Error("query is not serializable:\n" + report.to_string());
  }
  Inferencer inf(db);
  Path path;
  TypedLayout out;
  out.root = inf.infer(q, Tuple(), path);
  out.by_path = inf.take_by_path();
  return out;
}

// --- Descriptor encoding -----------------------------------------------------

namespace {

void put_u8(std::vector<uint8_t>& out, uint8_t v) { out.push_back(v); }

void put_i64(std::vector<uint8_t>& out, int64_t v) {
  uint64_t u = static_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(u >> (8 * i)));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_interval(std::vector<uint8_t>& out, const Interval& iv) {
  put_i64(out, iv.lo);
  put_i64(out, iv.hi);
}

void encode_rec(std::vector<uint8_t>& out, const LayoutTypePtr& t) {
  put_u8(out, static_cast<uint8_t>(t->kind));
  switch (t->kind) {
    case LayoutKind::kInt:
    case LayoutKind::kString:
    case LayoutKind::kDate:
      put_interval(out, t->values);
      break;
    case LayoutKind::kFixed:
      put_interval(out, t->values);
      put_u8(out, static_cast<uint8_t>(t->scale));
      break;
    case LayoutKind::kBool:
    case LayoutKind::kEmpty:
      break;
    case LayoutKind::kTuple:
      put_u8(out, static_cast<uint8_t>(t->tuple_kind));
      put_u32(out, static_cast<uint32_t>(t->children.size()));
      for (const auto& c : t->children) encode_rec(out, c);
      break;
    case LayoutKind::kList:
      put_interval(out, t->count);
      encode_rec(out, t->elem);
      break;
    case LayoutKind::kHashIdx:
    case LayoutKind::kOrderedIdx:
      put_interval(out, t->count);
      encode_rec(out, t->key);
      encode_rec(out, t->value);
      break;
  }
}

struct ByteReader {
  const std::vector<uint8_t>& bytes;
  size_t pos = 0;

  uint8_t u8() {
    if (pos + 1 > bytes.size()) throw Error("truncated layout type descriptor");
    return bytes[pos++];
  }
  uint32_t u32() {
    if (pos + 4 > bytes.size()) throw Error("truncated layout type descriptor");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t{bytes[pos++]} << (8 * i);
    return v;
  }
  int64_t i64() {
    if (pos + 8 > bytes.size()) throw Error("truncated layout type descriptor");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t{bytes[pos++]} << (8 * i);
    return static_cast<int64_t>(v);
  }
  Interval interval() {
    int64_t lo = i64();
    int64_t hi = i64();
    return Interval::of(lo, hi);
  }
};

LayoutTypePtr decode_rec(ByteReader& r) {
  auto kind = static_cast<LayoutKind>(r.u8());
  switch (kind) {
    case LayoutKind::kInt:
      return lt_int(r.interval());
    case LayoutKind::kBool:
      return lt_bool();
    case LayoutKind::kString:
      return lt_string(r.interval());
    case LayoutKind::kFixed: {
      Interval iv = r.interval();
      return lt_fixed(iv, r.u8());
    }
    case LayoutKind::kDate:
      return lt_date(r.interval());
    case LayoutKind::kTuple: {
      auto tk = static_cast<TupleKind>(r.u8());
      if (tk != TupleKind::kCross && tk != TupleKind::kConcat) {
        throw Error("bad tuple kind in layout type descriptor");
      }
      uint32_t n = r.u32();
      std::vector<LayoutTypePtr> kids;
      kids.reserve(n);
      for (uint32_t i = 0; i < n; ++i) kids.push_back(decode_rec(r));
      return lt_tuple(tk, std::move(kids));
    }
    case LayoutKind::kList: {
      Interval count = r.interval();
      return lt_list(decode_rec(r), count);
    }
    case LayoutKind::kHashIdx: {
      Interval count = r.interval();
      LayoutTypePtr key = decode_rec(r);
      LayoutTypePtr value = decode_rec(r);
      return lt_hash_idx(std::move(key), std::move(value), count);
    }
    case LayoutKind::kOrderedIdx: {
      Interval count = r.interval();
      LayoutTypePtr key = decode_rec(r);
      LayoutTypePtr value = decode_rec(r);
      return lt_ordered_idx(std::move(key), std::move(value), count);
    }
    case LayoutKind::kEmpty:
      return lt_empty();
  }
  throw Error("bad layout kind in descriptor");
}

}  // namespace

std::vector<uint8_t> encode_layout_type(const LayoutTypePtr& t) {
  std::vector<uint8_t> out;
  encode_rec(out, t);
  return out;
}

LayoutTypePtr decode_layout_type(const std::vector<uint8_t>& bytes) {
  ByteReader r{bytes};
  LayoutTypePtr t = decode_rec(r);
  if (r.pos != bytes.size()) {
    throw Error("trailing bytes after layout type descriptor");
  }
  return t;
}

}  // namespace strata
