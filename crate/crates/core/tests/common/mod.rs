// SPDX-License-Identifier: Apache-2.0

//! Oracles shared by the integration tests and the acceptance runner. Nothing
//! here calls into the code under test except to build expressions.

#![allow(dead_code)]

use coverif_core::bv::{mask, BvExpr, ConcreteEnv};
use rand::rngs::StdRng;
use rand::Rng;

// ---- bit-array reference -------------------------------------------------

/// Little-endian bit vector manipulated one bit at a time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bits(pub Vec<bool>);

impl Bits {
    pub fn from_u64(v: u64, width: u32) -> Bits {
        Bits((0..width).map(|i| (v >> i) & 1 == 1).collect())
    }

    pub fn to_u64(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (i, b)| acc | ((*b as u64) << i))
    }

    pub fn slice(&self, hi: u32, lo: u32) -> Bits {
        Bits(self.0[lo as usize..=hi as usize].to_vec())
    }
}

/// `dst[hi:lo] = src` where `src` is truncated or zero-padded to the field.
pub fn ref_bit_assign(dst: &Bits, hi: u32, lo: u32, src: &Bits) -> Bits {
    let mut out = dst.clone();
    for (k, i) in (lo..=hi).enumerate() {
        out.0[i as usize] = src.0.get(k).copied().unwrap_or(false);
    }
    out
}

/// `{a, b, ...}` with the first operand most significant.
pub fn ref_concat(parts: &[Bits]) -> Bits {
    let mut out = Vec::new();
    for p in parts.iter().rev() {
        out.extend(p.0.iter().copied());
    }
    Bits(out)
}

// ---- random expressions --------------------------------------------------

pub struct ExprGen {
    pub vars: Vec<(String, u32)>,
}

impl ExprGen {
    pub fn random(rng: &mut StdRng, max_vars: usize, max_width: u32) -> ExprGen {
        let n = rng.gen_range(1..=max_vars);
        let vars = (0..n)
            .map(|i| (format!("v{i}"), rng.gen_range(1..=max_width)))
            .collect();
        ExprGen { vars }
    }

    pub fn total_bits(&self) -> u32 {
        self.vars.iter().map(|(_, w)| *w).sum()
    }

    fn leaf(&self, rng: &mut StdRng, w: u32) -> BvExpr {
        if rng.gen_bool(0.25) {
            return BvExpr::konst(rng.gen::<u64>() & mask(w), w);
        }
        let (name, vw) = &self.vars[rng.gen_range(0..self.vars.len())];
        let v = BvExpr::var(name.as_str(), 0, *vw);
        if *vw == w {
            v
        } else if *vw > w {
            let lo = rng.gen_range(0..=vw - w);
            v.extract(lo + w - 1, lo)
        } else if rng.gen_bool(0.5) {
            v.zext(w)
        } else {
            v.sext(w)
        }
    }

    pub fn gen(&self, rng: &mut StdRng, w: u32, depth: u32) -> BvExpr {
        if depth == 0 || rng.gen_bool(0.2) {
            return self.leaf(rng, w);
        }
        let d = depth - 1;
        if w == 1 && rng.gen_bool(0.4) {
            let w2 = rng.gen_range(1..=6);
            let a = self.gen(rng, w2, d);
            let b = self.gen(rng, w2, d);
            return match rng.gen_range(0..7) {
                0 => a.eq(&b),
                1 => a.ult(&b),
                2 => a.ule(&b),
                3 => a.slt(&b),
                4 => a.redor(),
                5 => a.redand(),
                _ => a.redxor(),
            };
        }
        match rng.gen_range(0..14) {
            0 => self.gen(rng, w, d).not(),
            1 => self.gen(rng, w, d).neg(),
            2 => self.gen(rng, w, d).and(&self.gen(rng, w, d)),
            3 => self.gen(rng, w, d).or(&self.gen(rng, w, d)),
            4 => self.gen(rng, w, d).xor(&self.gen(rng, w, d)),
            5 => self.gen(rng, w, d).add(&self.gen(rng, w, d)),
            6 => self.gen(rng, w, d).sub(&self.gen(rng, w, d)),
            7 => self.gen(rng, w, d).mul(&self.gen(rng, w, d)),
            8 => {
                let aw = rng.gen_range(1..=6);
                self.gen(rng, w, d).shl(&self.gen(rng, aw, d))
            }
            9 => {
                let aw = rng.gen_range(1..=6);
                self.gen(rng, w, d).lshr(&self.gen(rng, aw, d))
            }
            10 => BvExpr::ite(&self.gen(rng, 1, d), &self.gen(rng, w, d), &self.gen(rng, w, d)),
            11 if w >= 2 => {
                let hiw = rng.gen_range(1..w);
                self.gen(rng, hiw, d).concat(&self.gen(rng, w - hiw, d))
            }
            12 if w < 12 => {
                let extra = rng.gen_range(1..=4);
                let lo = rng.gen_range(0..=extra);
                self.gen(rng, w + extra, d).extract(lo + w - 1, lo)
            }
            _ => self.leaf(rng, w),
        }
    }

    /// Calls `f` on every assignment of the variables until it returns true.
    pub fn any_assignment(&self, mut f: impl FnMut(&ConcreteEnv) -> bool) -> bool {
        let bits = self.total_bits();
        assert!(bits <= 24, "enumeration too large");
        for code in 0..(1u64 << bits) {
            let mut env = ConcreteEnv::new();
            let mut off = 0;
            for (name, w) in &self.vars {
                env.bind(name.as_str(), 0, *w, (code >> off) & mask(*w));
                off += w;
            }
            if f(&env) {
                return true;
            }
        }
        false
    }
}
