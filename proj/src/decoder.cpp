#include "elastorec/decoder.hpp"

#include <cmath>

namespace elastorec {

namespace {

struct LayerRef {
  size_t w = 0, b = 0;
  int in = 0, out = 0;
};

struct LevelRef {
  size_t convA_w = 0, convA_b = 0, convB_w = 0, convB_b = 0, skip_w = 0;
  int cin = 0, cout = 0;
  bool has_skip = false;
};

struct ProjRef {
  size_t w = 0, b = 0;
  int cin = 0;
};

struct Layout {
  bool linear = false;
  size_t lin_w = 0;
  std::vector<LayerRef> mlp;
  std::vector<LevelRef> levels; // k = 2..K
  std::vector<ProjRef> proj;    // k = 1..K
  size_t v_off = 0, total = 0;
};

Layout make_layout(const DecoderConfig& cfg, int T) {
  Layout lay;
  size_t off = 0;
  const int N = cfg.grid_n * cfg.grid_n;
  if (cfg.linear_mode) {
    lay.linear = true;
    lay.lin_w = off;
    off += (size_t)N * cfg.L;
  } else {
    int q = cfg.side(1);
    std::vector<int> dims;
    dims.push_back(cfg.L);
    for (int h : cfg.mlp_hidden) dims.push_back(h);
    dims.push_back(q * q * cfg.channels(1));
    for (size_t j = 0; j + 1 < dims.size(); ++j) {
      LayerRef lr;
      lr.in = dims[j];
      lr.out = dims[j + 1];
      lr.w = off;
      off += (size_t)lr.out * lr.in;
      lr.b = off;
      off += lr.out;
      lay.mlp.push_back(lr);
    }
    for (int k = 2; k <= cfg.K; ++k) {
      LevelRef lv;
      lv.cin = cfg.channels(k - 1);
      lv.cout = cfg.channels(k);
      lv.convA_w = off;
      off += (size_t)lv.cout * lv.cin * 9;
      lv.convA_b = off;
      off += lv.cout;
      lv.convB_w = off;
      off += (size_t)lv.cout * lv.cout * 9;
      lv.convB_b = off;
      off += lv.cout;
      lv.has_skip = lv.cin != lv.cout;
      if (lv.has_skip) {
        lv.skip_w = off;
        off += (size_t)lv.cout * lv.cin;
      }
      lay.levels.push_back(lv);
    }
    for (int k = 1; k <= cfg.K; ++k) {
      ProjRef pr;
      pr.cin = cfg.channels(k);
      pr.w = off;
      off += (size_t)pr.cin * 9;
      pr.b = off;
      off += 1;
      lay.proj.push_back(pr);
    }
  }
  lay.v_off = off;
  off += (size_t)T * cfg.L;
  lay.total = off;
  return lay;
}

enum class Act { Tanh, Relu, Identity };

Act act_kind(const std::string& s) {
  if (s == "tanh") return Act::Tanh;
  if (s == "relu") return Act::Relu;
  if (s == "identity") return Act::Identity;
  throw std::runtime_error("decoder: unknown activation '" + s + "'");
}

inline double act1(double x, Act a) {
  switch (a) {
    case Act::Tanh: return std::tanh(x);
    case Act::Relu: return x > 0.0 ? x : 0.0;
    default: return x;
  }
}

inline double dact1(double x, Act a) {
  switch (a) {
    case Act::Tanh: {
      double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Act::Relu: return x > 0.0 ? 1.0 : 0.0;
    default: return 1.0;
  }
}

// split activation: independent nonlinearity on real and imaginary parts
void act_apply(const CVec& pre, CVec& out, Act a) {
  out.resize(pre.size());
  for (size_t i = 0; i < pre.size(); ++i)
    out[i] = cd(act1(pre[i].real(), a), act1(pre[i].imag(), a));
}

void act_backward(const CVec& pre, const CVec& gout, CVec& gin, Act a) {
  gin.resize(pre.size());
  for (size_t i = 0; i < pre.size(); ++i)
    gin[i] = cd(dact1(pre[i].real(), a) * gout[i].real(),
                dact1(pre[i].imag(), a) * gout[i].imag());
}

// y = W x + b
void dense(const cd* W, const cd* b, const cd* x, int in, int out, cd* y) {
  for (int o = 0; o < out; ++o) {
    cd acc = b ? b[o] : cd(0.0, 0.0);
    const cd* row = W + (size_t)o * in;
    for (int i = 0; i < in; ++i) acc += row[i] * x[i];
    y[o] = acc;
  }
}

void dense_backward(const cd* W, const cd* x, int in, int out, const cd* gy,
                    cd* gx, cd* gW, cd* gb) {
  if (gx)
    for (int i = 0; i < in; ++i) gx[i] = cd(0.0, 0.0);
  for (int o = 0; o < out; ++o) {
    const cd* row = W + (size_t)o * in;
    cd g = gy[o];
    if (gb) gb[o] += g;
    for (int i = 0; i < in; ++i) {
      if (gx) gx[i] += std::conj(row[i]) * g;
      if (gW) gW[(size_t)o * in + i] += g * std::conj(x[i]);
    }
  }
}

// 3x3 same-size convolution with zero padding; W layout [co][ci][3][3]
void conv3(const cd* in, int ci, int s, const cd* W, const cd* b, int co,
           cd* out) {
  for (int o = 0; o < co; ++o) {
    cd bias = b ? b[o] : cd(0.0, 0.0);
    cd* op = out + (size_t)o * s * s;
    for (int q = 0; q < s * s; ++q) op[q] = bias;
  }
  for (int o = 0; o < co; ++o) {
    cd* op = out + (size_t)o * s * s;
    for (int i = 0; i < ci; ++i) {
      const cd* ip = in + (size_t)i * s * s;
      const cd* wq = W + ((size_t)o * ci + i) * 9;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          cd w = wq[(dy + 1) * 3 + (dx + 1)];
          int y0 = std::max(0, -dy), y1 = std::min(s, s - dy);
          int x0 = std::max(0, -dx), x1 = std::min(s, s - dx);
          for (int y = y0; y < y1; ++y) {
            cd* orow = op + (size_t)y * s;
            const cd* irow = ip + (size_t)(y + dy) * s + dx;
            for (int x = x0; x < x1; ++x) orow[x] += w * irow[x];
          }
        }
      }
    }
  }
}

void conv3_backward(const cd* in, int ci, int s, const cd* W, int co,
                    const cd* gout, cd* gin, cd* gW, cd* gb) {
  if (gin)
    for (int q = 0; q < ci * s * s; ++q) gin[q] = cd(0.0, 0.0);
  for (int o = 0; o < co; ++o) {
    const cd* gp = gout + (size_t)o * s * s;
    if (gb) {
      cd acc(0.0, 0.0);
      for (int q = 0; q < s * s; ++q) acc += gp[q];
      gb[o] += acc;
    }
    for (int i = 0; i < ci; ++i) {
      const cd* ip = in + (size_t)i * s * s;
      cd* gi = gin ? gin + (size_t)i * s * s : nullptr;
      const cd* wq = W + ((size_t)o * ci + i) * 9;
      cd* gwq = gW ? gW + ((size_t)o * ci + i) * 9 : nullptr;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          cd wc = std::conj(wq[(dy + 1) * 3 + (dx + 1)]);
          cd gacc(0.0, 0.0);
          int y0 = std::max(0, -dy), y1 = std::min(s, s - dy);
          int x0 = std::max(0, -dx), x1 = std::min(s, s - dx);
          for (int y = y0; y < y1; ++y) {
            const cd* grow = gp + (size_t)y * s;
            const cd* irow = ip + (size_t)(y + dy) * s + dx;
            cd* girow = gi ? gi + (size_t)(y + dy) * s + dx : nullptr;
            for (int x = x0; x < x1; ++x) {
              if (girow) girow[x] += wc * grow[x];
              gacc += grow[x] * std::conj(irow[x]);
            }
          }
          if (gwq) gwq[(dy + 1) * 3 + (dx + 1)] += gacc;
        }
      }
    }
  }
}

// 1x1 convolution (channel mixing), used for the residual skip path
void conv1(const cd* in, int ci, int s, const cd* W, int co, cd* out,
           bool accumulate) {
  for (int o = 0; o < co; ++o) {
    cd* op = out + (size_t)o * s * s;
    for (int i = 0; i < ci; ++i) {
      cd w = W[(size_t)o * ci + i];
      const cd* ip = in + (size_t)i * s * s;
      if (i == 0 && !accumulate)
        for (int q = 0; q < s * s; ++q) op[q] = w * ip[q];
      else
        for (int q = 0; q < s * s; ++q) op[q] += w * ip[q];
    }
  }
}

void conv1_backward(const cd* in, int ci, int s, const cd* W, int co,
                    const cd* gout, cd* gin, cd* gW) {
  for (int o = 0; o < co; ++o) {
    const cd* gp = gout + (size_t)o * s * s;
    for (int i = 0; i < ci; ++i) {
      cd wc = std::conj(W[(size_t)o * ci + i]);
      const cd* ip = in + (size_t)i * s * s;
      cd* gi = gin + (size_t)i * s * s;
      cd gacc(0.0, 0.0);
      for (int q = 0; q < s * s; ++q) {
        gi[q] += wc * gp[q];
        gacc += gp[q] * std::conj(ip[q]);
      }
      if (gW) gW[(size_t)o * ci + i] += gacc;
    }
  }
}

// 2x linear-interpolation upsampling per channel (edge clamped)
void upsample2(const cd* in, int c, int s, cd* out) {
  const int S = 2 * s;
  std::vector<cd> tmp((size_t)s * S);
  for (int ch = 0; ch < c; ++ch) {
    const cd* ip = in + (size_t)ch * s * s;
    cd* op = out + (size_t)ch * S * S;
    for (int y = 0; y < s; ++y) {
      const cd* row = ip + (size_t)y * s;
      cd* trow = tmp.data() + (size_t)y * S;
      for (int x = 0; x < s; ++x) {
        trow[2 * x] = row[x];
        trow[2 * x + 1] = 0.5 * (row[x] + row[std::min(x + 1, s - 1)]);
      }
    }
    for (int y = 0; y < s; ++y) {
      const cd* a = tmp.data() + (size_t)y * S;
      const cd* b = tmp.data() + (size_t)std::min(y + 1, s - 1) * S;
      cd* r0 = op + (size_t)(2 * y) * S;
      cd* r1 = op + (size_t)(2 * y + 1) * S;
      for (int x = 0; x < S; ++x) {
        r0[x] = a[x];
        r1[x] = 0.5 * (a[x] + b[x]);
      }
    }
  }
}

void upsample2_adjoint(const cd* gout, int c, int s, cd* gin) {
  const int S = 2 * s;
  std::vector<cd> tmp((size_t)s * S);
  for (int ch = 0; ch < c; ++ch) {
    const cd* gp = gout + (size_t)ch * S * S;
    cd* gi = gin + (size_t)ch * s * s;
    std::fill(tmp.begin(), tmp.end(), cd(0.0, 0.0));
    for (int y = 0; y < s; ++y) {
      const cd* r0 = gp + (size_t)(2 * y) * S;
      const cd* r1 = gp + (size_t)(2 * y + 1) * S;
      cd* a = tmp.data() + (size_t)y * S;
      cd* b = tmp.data() + (size_t)std::min(y + 1, s - 1) * S;
      for (int x = 0; x < S; ++x) {
        a[x] += r0[x] + 0.5 * r1[x];
        b[x] += 0.5 * r1[x];
      }
    }
    for (int y = 0; y < s; ++y) {
      const cd* trow = tmp.data() + (size_t)y * S;
      cd* grow = gi + (size_t)y * s;
      for (int x = 0; x < s; ++x) {
        grow[x] += trow[2 * x] + 0.5 * trow[2 * x + 1];
        if (x + 1 < s)
          grow[x + 1] += 0.5 * trow[2 * x + 1];
        else
          grow[x] += 0.5 * trow[2 * x + 1];
      }
    }
  }
}

void add_noise(CVec& feat, double sigma_rel, Rng& rng) {
  if (sigma_rel <= 0.0) return;
  double ss = 0.0;
  for (const cd& z : feat) ss += std::norm(z);
  double rms = std::sqrt(ss / feat.size());
  double s = sigma_rel * rms / std::sqrt(2.0);
  for (cd& z : feat) z += s * rng.cgauss();
}

} // namespace

void DecoderConfig::validate() const {
  require(grid_n > 0 && (grid_n & (grid_n - 1)) == 0,
          "decoder: grid must be a power of two");
  require(K >= 1 && grid_n % (1 << (K - 1)) == 0, "decoder: bad level count");
  require(L >= 1, "decoder: L >= 1");
  if (!linear_mode) require(mlp_hidden.size() >= 1, "decoder: empty MLP");
  act_kind(activation); // throws on unknown names
}

size_t param_count(const DecoderConfig& cfg, int T) {
  return make_layout(cfg, T).total;
}

DecoderParams init_params(const DecoderConfig& cfg, const LatentMatrix& v0,
                          uint64_t seed) {
  cfg.validate();
  require(v0.L == cfg.L, "init_params: latent length mismatch");
  Layout lay = make_layout(cfg, v0.T);
  DecoderParams p;
  p.cfg = cfg;
  p.T = v0.T;
  p.v_offset = lay.v_off;
  p.theta.assign(lay.total, cd(0.0, 0.0));
  Rng rng(seed ^ 0xdec0de);

  auto glorot = [&](size_t off, size_t count, int fan_in, int fan_out) {
    double s = std::sqrt(1.0 / (fan_in + fan_out)) / std::sqrt(2.0);
    for (size_t i = 0; i < count; ++i) p.theta[off + i] = s * rng.cgauss();
  };

  if (lay.linear) {
    // zero init: unobserved k-space modes then stay at zero during training
    // (minimum-norm least squares), matching the subspace solve started at 0
  } else {
    for (const auto& lr : lay.mlp)
      glorot(lr.w, (size_t)lr.out * lr.in, lr.in, lr.out);
    for (const auto& lv : lay.levels) {
      glorot(lv.convA_w, (size_t)lv.cout * lv.cin * 9, lv.cin * 9, lv.cout * 9);
      glorot(lv.convB_w, (size_t)lv.cout * lv.cout * 9, lv.cout * 9,
             lv.cout * 9);
      if (lv.has_skip)
        glorot(lv.skip_w, (size_t)lv.cout * lv.cin, lv.cin, lv.cout);
    }
    for (const auto& pr : lay.proj) glorot(pr.w, (size_t)pr.cin * 9, pr.cin * 9, 9);
  }
  for (int t = 0; t < v0.T; ++t)
    for (int l = 0; l < cfg.L; ++l) p.v_row(t)[l] = v0.at(t, l);
  return p;
}

std::vector<CVec> decode(const DecoderParams& p, int t, bool train_mode,
                         Rng* noise_rng, DecodeCache* cache) {
  const DecoderConfig& cfg = p.cfg;
  Layout lay = make_layout(cfg, p.T);
  require(!train_mode || noise_rng, "decode: train mode needs a noise rng");
  const cd* v = p.v_row(t);

  if (lay.linear) {
    const int N = cfg.grid_n * cfg.grid_n;
    std::vector<CVec> out(1, CVec((size_t)N));
    dense(p.theta.data() + lay.lin_w, nullptr, v, cfg.L, N, out[0].data());
    return out;
  }

  Act a = act_kind(cfg.activation);
  DecodeCache local;
  DecodeCache& cc = cache ? *cache : local;
  cc.mlp_pre.assign(lay.mlp.size(), {});
  cc.mlp_act.assign(lay.mlp.size(), {});
  cc.feat.assign(cfg.K, {});
  cc.up.assign(cfg.K, {});
  cc.convA_pre.assign(cfg.K, {});
  cc.convA_act.assign(cfg.K, {});

  CVec x(v, v + cfg.L);
  for (size_t j = 0; j < lay.mlp.size(); ++j) {
    const auto& lr = lay.mlp[j];
    cc.mlp_pre[j].resize(lr.out);
    dense(p.theta.data() + lr.w, p.theta.data() + lr.b, x.data(), lr.in,
          lr.out, cc.mlp_pre[j].data());
    if (j + 1 < lay.mlp.size()) {
      act_apply(cc.mlp_pre[j], cc.mlp_act[j], a);
      x = cc.mlp_act[j];
    } else {
      x = cc.mlp_pre[j]; // final MLP layer is linear
    }
  }

  cc.feat[0] = x; // coarsest feature map, c0 x q x q
  if (train_mode) add_noise(cc.feat[0], cfg.noise_sigma_feat, *noise_rng);

  for (int k = 2; k <= cfg.K; ++k) {
    const auto& lv = lay.levels[k - 2];
    int s = cfg.side(k);
    cc.up[k - 1].resize((size_t)lv.cin * s * s);
    upsample2(cc.feat[k - 2].data(), lv.cin, s / 2, cc.up[k - 1].data());
    cc.convA_pre[k - 1].resize((size_t)lv.cout * s * s);
    conv3(cc.up[k - 1].data(), lv.cin, s, p.theta.data() + lv.convA_w,
          p.theta.data() + lv.convA_b, lv.cout, cc.convA_pre[k - 1].data());
    act_apply(cc.convA_pre[k - 1], cc.convA_act[k - 1], a);
    cc.feat[k - 1].resize((size_t)lv.cout * s * s);
    conv3(cc.convA_act[k - 1].data(), lv.cout, s, p.theta.data() + lv.convB_w,
          p.theta.data() + lv.convB_b, lv.cout, cc.feat[k - 1].data());
    if (lv.has_skip)
      conv1(cc.up[k - 1].data(), lv.cin, s, p.theta.data() + lv.skip_w,
            lv.cout, cc.feat[k - 1].data(), true);
    else
      for (size_t q = 0; q < cc.feat[k - 1].size(); ++q)
        cc.feat[k - 1][q] += cc.up[k - 1][q];
    if (train_mode) add_noise(cc.feat[k - 1], cfg.noise_sigma_feat, *noise_rng);
  }

  std::vector<CVec> out(cfg.K);
  for (int k = 1; k <= cfg.K; ++k) {
    const auto& pr = lay.proj[k - 1];
    int s = cfg.side(k);
    out[k - 1].resize((size_t)s * s);
    conv3(cc.feat[k - 1].data(), pr.cin, s, p.theta.data() + pr.w,
          p.theta.data() + pr.b, 1, out[k - 1].data());
  }
  return out;
}

void decode_backward(const DecoderParams& p, int t, const DecodeCache& cc,
                     const std::vector<CVec>& grad_rho, CVec& grad_theta) {
  const DecoderConfig& cfg = p.cfg;
  Layout lay = make_layout(cfg, p.T);
  require(grad_theta.size() == p.theta.size(), "backward: grad size mismatch");
  cd* gv = grad_theta.data() + lay.v_off + (size_t)t * cfg.L;

  if (lay.linear) {
    const int N = cfg.grid_n * cfg.grid_n;
    CVec gx(cfg.L, cd(0.0, 0.0));
    dense_backward(p.theta.data() + lay.lin_w, p.v_row(t), cfg.L, N,
                   grad_rho[0].data(), gx.data(),
                   grad_theta.data() + lay.lin_w, nullptr);
    for (int l = 0; l < cfg.L; ++l) gv[l] += gx[l];
    return;
  }

  Act a = act_kind(cfg.activation);
  std::vector<CVec> gfeat(cfg.K);
  for (int k = 1; k <= cfg.K; ++k) {
    const auto& pr = lay.proj[k - 1];
    int s = cfg.side(k);
    gfeat[k - 1].assign((size_t)pr.cin * s * s, cd(0.0, 0.0));
    conv3_backward(cc.feat[k - 1].data(), pr.cin, s, p.theta.data() + pr.w, 1,
                   grad_rho[k - 1].data(), gfeat[k - 1].data(),
                   grad_theta.data() + pr.w, grad_theta.data() + pr.b);
  }

  for (int k = cfg.K; k >= 2; --k) {
    const auto& lv = lay.levels[k - 2];
    int s = cfg.side(k);
    // residual block backward: gfeat[k-1] flows into convB path and skip
    CVec gact((size_t)lv.cout * s * s, cd(0.0, 0.0));
    conv3_backward(cc.convA_act[k - 1].data(), lv.cout, s,
                   p.theta.data() + lv.convB_w, lv.cout,
                   gfeat[k - 1].data(), gact.data(),
                   grad_theta.data() + lv.convB_w,
                   grad_theta.data() + lv.convB_b);
    CVec gpre;
    act_backward(cc.convA_pre[k - 1], gact, gpre, a);
    CVec gup((size_t)lv.cin * s * s, cd(0.0, 0.0));
    conv3_backward(cc.up[k - 1].data(), lv.cin, s,
                   p.theta.data() + lv.convA_w, lv.cout, gpre.data(),
                   gup.data(), grad_theta.data() + lv.convA_w,
                   grad_theta.data() + lv.convA_b);
    if (lv.has_skip)
      conv1_backward(cc.up[k - 1].data(), lv.cin, s,
                     p.theta.data() + lv.skip_w, lv.cout,
                     gfeat[k - 1].data(), gup.data(),
                     grad_theta.data() + lv.skip_w);
    else
      for (size_t q = 0; q < gup.size(); ++q) gup[q] += gfeat[k - 1][q];
    upsample2_adjoint(gup.data(), lv.cin, s / 2, gfeat[k - 2].data());
  }

  // MLP backward; final layer was linear
  CVec g = gfeat[0];
  for (int j = (int)lay.mlp.size() - 1; j >= 0; --j) {
    const auto& lr = lay.mlp[j];
    if (j + 1 < (int)lay.mlp.size()) {
      CVec tmp;
      act_backward(cc.mlp_pre[j], g, tmp, a);
      g = std::move(tmp);
    }
    const cd* input;
    CVec vx;
    if (j == 0) {
      vx.assign(p.v_row(t), p.v_row(t) + cfg.L);
      input = vx.data();
    } else {
      input = cc.mlp_act[j - 1].data();
    }
    CVec gx(lr.in, cd(0.0, 0.0));
    dense_backward(p.theta.data() + lr.w, input, lr.in, lr.out, g.data(),
                   gx.data(), grad_theta.data() + lr.w,
                   grad_theta.data() + lr.b);
    g = std::move(gx);
  }
  for (int l = 0; l < cfg.L; ++l) gv[l] += g[l];
}

} // namespace elastorec
