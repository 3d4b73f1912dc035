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

#include "strata/serialize.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "strata/interp.hpp"
#include "strata/ir.hpp"

namespace strata {

int64_t hash_slot(uint64_t hash, int64_t modulus) {
  return static_cast<int64_t>(hash & 0x7fffffffffffffffULL) % modulus;
}

namespace {

int64_t ipow10(int n) {
  int64_t f = 1;
  while (n-- > 0) f *= 10;
  return f;
}

// Numerator of `v` re-expressed at `scale` (>= v.scale()).
int64_t rescaled_numerator(const Value& v, int scale, const Path& path) {
  if (v.scale() > scale) {
    throw Error("fixed-point scale " + std::to_string(v.scale()) +
                " exceeds the layout type's scale at " + path_to_string(path));
  }
  int64_t f = ipow10(scale - v.scale());
  int64_t num = v.numerator();
  if (num > 0 ? num > INT64_MAX / f : num < INT64_MIN / f) {
    throw Error("fixed-point rescale overflow at " + path_to_string(path));
  }
  return num * f;
}

class Serializer {
 public:
  Serializer(const Database& db, const TypedLayout& typed)
      : base_(db), typed_(typed) {}

  SerializedLayout run(const QueryPtr& q) {
    Path path;
    ser(q, Tuple{}, path);
    SerializedLayout out;
    out.bytes = std::move(out_);
    out.first_offset = std::move(first_);
    return out;
  }

 private:
  // -- byte plumbing --

  void put_int(int64_t v, int w, const char* what) {
    check_width(v, w, what);
    uint64_t u = static_cast<uint64_t>(v);
    for (int i = 0; i < w; ++i) {
      out_.push_back(static_cast<uint8_t>(u >> (8 * i)));
    }
  }

  static void check_width(int64_t v, int w, const char* what) {
    if (w < 8) {
      int64_t lo = -(int64_t{1} << (8 * w - 1));
      int64_t hi = (int64_t{1} << (8 * w - 1)) - 1;
      if (v < lo || v > hi) {
        throw Error(std::string(what) + " value " + std::to_string(v) +
                    " does not fit in " + std::to_string(w) + " bytes");
      }
    }
  }

  size_t reserve(int w) {
    size_t at = out_.size();
    out_.insert(out_.end(), static_cast<size_t>(w), 0);
    return at;
  }

  void patch_int(size_t at, int w, int64_t v, const char* what) {
    check_width(v, w, what);
    uint64_t u = static_cast<uint64_t>(v);
    for (int i = 0; i < w; ++i) {
      out_[at + static_cast<size_t>(i)] = static_cast<uint8_t>(u >> (8 * i));
    }
  }

  // -- geometry helpers --

  const LayoutTypePtr& type_at(const Path& path) {
    auto pos = typed_.by_path.find(path_to_string(path));
    if (pos == typed_.by_path.end()) {
      throw Error("no layout type recorded at " + path_to_string(path));
    }
    return pos->second;
  }

  void put_count(const LayoutTypePtr& t, int64_t n, const Path& path) {
    int cw = count_header_width(t);
    if (cw > 0) {
      put_int(n, cw, "count header");
    } else if (n != t->count.lo) {
      throw Error("element count " + std::to_string(n) +
                  " differs from the elided header's constant " +
                  std::to_string(t->count.lo) + " at " + path_to_string(path));
    }
  }

  // Writes the [len?] header placeholder; returns its position (only
  // meaningful when the width is nonzero).
  size_t open_len(const LayoutTypePtr& t) { return reserve(len_header_width(t)); }

  void close_len(const LayoutTypePtr& t, size_t lpos, size_t content_start,
                 const Path& path) {
    int64_t content = static_cast<int64_t>(out_.size() - content_start);
    int lw = len_header_width(t);
    if (lw > 0) {
      patch_int(lpos, lw, content, "length header");
    } else if (content != t->byte_len.lo) {
      throw Error("content length " + std::to_string(content) +
                  " differs from the elided header's constant " +
                  std::to_string(t->byte_len.lo) + " at " +
                  path_to_string(path));
    }
  }

  // -- scalar encodings --

  static void require_kind(const Value& v, ValueKind want, const Path& path) {
    if (v.kind() == ValueKind::kNull) {
      throw Error("cannot serialize a null value at " + path_to_string(path));
    }
    if (v.kind() != want) {
      throw Error("value kind does not match the layout type at " +
                  path_to_string(path));
    }
  }

  // Appends the scalar encoding of `v` per type `t` to `buf`.  When
  // `pad_to_slot` is set, strings are zero-padded to the type's maximum
  // length so the encoding has a fixed width (index key slots need that).
  void encode_scalar(std::vector<uint8_t>& buf, const Value& v,
                     const LayoutTypePtr& t, const Path& path,
                     bool pad_to_slot) {
    auto put = [&](int64_t x, int w, const char* what) {
      check_width(x, w, what);
      uint64_t u = static_cast<uint64_t>(x);
      for (int i = 0; i < w; ++i) {
        buf.push_back(static_cast<uint8_t>(u >> (8 * i)));
      }
    };
    switch (t->kind) {
      case LayoutKind::kInt:
        require_kind(v, ValueKind::kInt, path);
        put(v.as_int(), t->width, "int");
        return;
      case LayoutKind::kDate:
        require_kind(v, ValueKind::kDate, path);
        put(v.days(), t->width, "date");
        return;
      case LayoutKind::kFixed:
        require_kind(v, ValueKind::kFixed, path);
        put(rescaled_numerator(v, t->scale, path), t->width, "fixed");
        return;
      case LayoutKind::kBool:
        require_kind(v, ValueKind::kBool, path);
        buf.push_back(v.as_bool() ? 1 : 0);
        return;
      case LayoutKind::kString: {
        require_kind(v, ValueKind::kString, path);
        const std::string& s = v.as_string();
        int64_t n = static_cast<int64_t>(s.size());
        int lw = len_header_width(t);
        if (lw > 0) {
          put(n, lw, "string length");
        } else if (n != t->values.lo) {
          throw Error("string length " + std::to_string(n) +
                      " differs from the elided header's constant " +
                      std::to_string(t->values.lo) + " at " +
                      path_to_string(path));
        }
        if (n > t->values.hi) {
          throw Error("string longer than the layout type allows at " +
                      path_to_string(path));
        }
        buf.insert(buf.end(), s.begin(), s.end());
        if (pad_to_slot) {
          buf.insert(buf.end(), static_cast<size_t>(t->values.hi - n), 0);
        }
        return;
      }
      default:
        throw Error(std::string("scalar value cannot be laid out as ") +
                    layout_kind_name(t->kind) + " at " + path_to_string(path));
    }
  }

  // -- node serializers --

  void ser(const QueryPtr& q, const Tuple& sigma, Path& path) {
    const LayoutTypePtr t = type_at(path);
    first_.emplace(path_to_string(path), static_cast<int64_t>(out_.size()));
    switch (q->kind) {
      case QueryExpr::Kind::kSelect:
      case QueryExpr::Kind::kFilter:
        // Run-time row operators read their child's bytes and add none.
        path.push_back(0);
        ser(q->children[0], sigma, path);
        path.pop_back();
        return;
      case QueryExpr::Kind::kDepJoin: {
        size_t lpos = open_len(t);
        size_t cstart = out_.size();
        path.push_back(0);
        ser(q->children[0], sigma, path);
        path.back() = 1;
        ser(q->children[1], sigma, path);
        path.pop_back();
        close_len(t, lpos, cstart, path);
        return;
      }
      case QueryExpr::Kind::kAScalar: {
        Value v = eval_expr(q->scalar.expr, base_.with_sigma(sigma));
        encode_scalar(out_, v, t, path, /*pad_to_slot=*/false);
        return;
      }
      case QueryExpr::Kind::kATuple: {
        size_t lpos = open_len(t);
        size_t cstart = out_.size();
        for (size_t i = 0; i < q->children.size(); ++i) {
          path.push_back(static_cast<int>(i));
          ser(q->children[i], sigma, path);
          path.pop_back();
        }
        close_len(t, lpos, cstart, path);
        return;
      }
      case QueryExpr::Kind::kAList: {
        Relation keys = eval_query(q->children[0], base_.with_sigma(sigma));
        put_count(t, static_cast<int64_t>(keys.rows.size()), path);
        size_t lpos = open_len(t);
        size_t cstart = out_.size();
        path.push_back(1);
        for (const Tuple& row : keys.rows) {
          Tuple inner = Tuple::disjoint_union(sigma, row.scoped(q->scope));
          ser(q->children[1], inner, path);
        }
        path.pop_back();
        close_len(t, lpos, cstart, path);
        return;
      }
      case QueryExpr::Kind::kAHashIdx:
        ser_hash(q, sigma, path, t);
        return;
      case QueryExpr::Kind::kAOrderedIdx:
        ser_ordered(q, sigma, path, t);
        return;
      case QueryExpr::Kind::kAEmpty:
        return;  // zero bytes
      default:
        throw Error(std::string("operator has no serialized form at ") +
                    path_to_string(path));
    }
  }

  void ser_hash(const QueryPtr& q, const Tuple& sigma, Path& path,
                const LayoutTypePtr& t) {
    size_t node_start = out_.size();
    Relation keys = eval_query(q->children[0], base_.with_sigma(sigma));
    int64_t n = static_cast<int64_t>(keys.rows.size());
    size_t arity = keys.schema.size();

    // Hashable key tuples, plus duplicate detection.  The canonical hash
    // encoding is injective up to probe equality (5 and 5.0 encode alike), so
    // it doubles as the key identity.
    std::vector<std::vector<VmVal>> kv(n);
    std::map<std::string, int64_t> seen;
    for (int64_t i = 0; i < n; ++i) {
      std::string enc;
      for (size_t c = 0; c < arity; ++c) {
        const Value& v = keys.rows[i].fields()[c].second;
        kv[i].push_back(VmVal::of(v));
        encode_val_for_hash(enc, kv[i].back());
      }
      if (!seen.emplace(std::move(enc), i).second) {
        throw Error("duplicate hash index keys at " + path_to_string(path));
      }
    }

    // Perfect displacement seeds: largest bucket first, seeds searched from
    // 1 upward; 0 marks a bucket that holds no keys.
    int64_t nb = hash_bucket_count(n);
    std::vector<std::vector<int64_t>> buckets(nb);
    for (int64_t i = 0; i < n; ++i) {
      buckets[hash_slot(hash_vals(0, kv[i]), nb)].push_back(i);
    }
    std::vector<int64_t> order(nb);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int64_t a, int64_t b) {
      if (buckets[a].size() != buckets[b].size()) {
        return buckets[a].size() > buckets[b].size();
      }
      return a < b;
    });
    std::vector<uint32_t> seeds(nb, 0);
    std::vector<int64_t> row_in_slot(n, -1);
    for (int64_t b : order) {
      const auto& rows = buckets[b];
      if (rows.empty()) continue;
      bool placed = false;
      for (uint32_t s = 1; s <= kMaxSeedAttempts && !placed; ++s) {
        std::vector<int64_t> cand;
        cand.reserve(rows.size());
        bool ok = true;
        for (int64_t r : rows) {
          int64_t slot = hash_slot(hash_vals(s, kv[r]), n);
          if (row_in_slot[slot] >= 0 ||
              std::find(cand.begin(), cand.end(), slot) != cand.end()) {
            ok = false;
            break;
          }
          cand.push_back(slot);
        }
        if (!ok) continue;
        for (size_t k = 0; k < rows.size(); ++k) row_in_slot[cand[k]] = rows[k];
        seeds[b] = s;
        placed = true;
      }
      if (!placed) {
        throw Error("hash index seed search exhausted its budget at " +
                    path_to_string(path));
      }
    }

    // Headers, seed table, then a placeholder slot table; value blobs stream
    // in slot order and the table is patched once their offsets are known.
    put_count(t, n, path);
    size_t lpos = open_len(t);
    size_t cstart = out_.size();
    for (int64_t b = 0; b < nb; ++b) put_int(seeds[b], kHashSeedWidth, "seed");
    int64_t slot_w = key_slot_width(t->key) + t->off_width;
    size_t table_at = out_.size();
    out_.insert(out_.end(), static_cast<size_t>(n * slot_w), 0);
    std::vector<int64_t> vstart(n, 0);
    path.push_back(1);
    for (int64_t i = 0; i < n; ++i) {
      int64_t r = row_in_slot[i];
      vstart[i] = static_cast<int64_t>(out_.size() - node_start);
      const Tuple& row = keys.rows[r];
      Tuple inner = Tuple::disjoint_union(sigma, row.scoped(q->scope));
      ser(q->children[1], inner, path);
    }
    path.pop_back();
    for (int64_t i = 0; i < n; ++i) {
      std::vector<uint8_t> slot;
      const Tuple& row = keys.rows[row_in_slot[i]];
      for (size_t c = 0; c < arity; ++c) {
        encode_scalar(slot, row.fields()[c].second, t->key->children[c], path,
                      /*pad_to_slot=*/true);
      }
      if (t->off_width > 0) {
        check_width(vstart[i], t->off_width, "value offset");
        uint64_t u = static_cast<uint64_t>(vstart[i]);
        for (int b = 0; b < t->off_width; ++b) {
          slot.push_back(static_cast<uint8_t>(u >> (8 * b)));
        }
      }
      if (static_cast<int64_t>(slot.size()) != slot_w) {
        throw Error("slot width mismatch at " + path_to_string(path));
      }
      std::copy(slot.begin(), slot.end(),
                out_.begin() + static_cast<int64_t>(table_at) + i * slot_w);
    }
    close_len(t, lpos, cstart, path);
  }

  void ser_ordered(const QueryPtr& q, const Tuple& sigma, Path& path,
                   const LayoutTypePtr& t) {
    size_t node_start = out_.size();
    Relation keys = eval_query(q->children[0], base_.with_sigma(sigma));
    int64_t n = static_cast<int64_t>(keys.rows.size());
    size_t arity = keys.schema.size();
    for (int64_t i = 1; i < n; ++i) {
      if (Tuple::compare_total(keys.rows[i - 1], keys.rows[i]) >= 0) {
        throw Error("unsorted input at " + path_to_string(path) +
                    ": ordered index keys must be strictly increasing");
      }
    }
    put_count(t, n, path);
    size_t lpos = open_len(t);
    size_t cstart = out_.size();
    for (int64_t i = 0; i < n; ++i) {
      for (size_t c = 0; c < arity; ++c) {
        encode_scalar(out_, keys.rows[i].fields()[c].second,
                      t->key->children[c], path, /*pad_to_slot=*/true);
      }
    }
    size_t offs_at = out_.size();
    if (t->off_width > 0) {
      out_.insert(out_.end(), static_cast<size_t>((n + 1) * t->off_width), 0);
    }
    std::vector<int64_t> vstart(n + 1, 0);
    path.push_back(1);
    for (int64_t i = 0; i < n; ++i) {
      vstart[i] = static_cast<int64_t>(out_.size() - node_start);
      Tuple inner = Tuple::disjoint_union(sigma, keys.rows[i].scoped(q->scope));
      ser(q->children[1], inner, path);
    }
    path.pop_back();
    vstart[n] = static_cast<int64_t>(out_.size() - node_start);
    if (t->off_width > 0) {
      for (int64_t i = 0; i <= n; ++i) {
        patch_int(offs_at + static_cast<size_t>(i * t->off_width), t->off_width,
                  vstart[i], "value offset");
      }
    }
    close_len(t, lpos, cstart, path);
  }

  EvalContext base_;
  const TypedLayout& typed_;
  std::vector<uint8_t> out_;
  std::map<std::string, int64_t> first_;
};

}  // namespace

SerializedLayout serialize(const QueryPtr& q, const Database& db,
                           const TypedLayout& typed) {
  return Serializer(db, typed).run(q);
}

}  // namespace strata
