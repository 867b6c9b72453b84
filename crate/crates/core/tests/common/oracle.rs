//! Brute-force entailment oracle over short QDC sequences.
//!
//! A sequence has 2 to 5 frames; each frame holds a band 0..=3 or nothing
//! (`None`, the binding did not resolve). A pattern is true on a sequence when
//! no applicable check fails. `p1` entails `p2` exactly when `p2` is true on
//! every sequence where `p1` is.

use qsrteach::features::{FeatureFunction, FeatureKind, FeatureValue, QdcBand};
use qsrteach::pattern::{Comparator, Pattern, Template};

pub type Seq = Vec<Option<u8>>;

pub fn all_sequences() -> Vec<Seq> {
    let mut out = Vec::new();
    for len in 2..=5u32 {
        for code in 0..5usize.pow(len) {
            let mut c = code;
            let seq = (0..len)
                .map(|_| {
                    let d = c % 5;
                    c /= 5;
                    (d < 4).then_some(d as u8)
                })
                .collect();
            out.push(seq);
        }
    }
    out
}

fn cmp_holds(symbol: &str, a: u8, b: u8) -> bool {
    match symbol {
        "<" => a < b,
        ">" => a > b,
        "=" => a == b,
        "<=" => a <= b,
        ">=" => a >= b,
        "!=" => a != b,
        other => panic!("unexpected comparator {other}"),
    }
}

pub fn truth(p: &Pattern, s: &Seq) -> bool {
    let sym = p.comparator().symbol();
    let c = p.constant_value().map(|v| v.ordinal() as u8);
    let last = s.len() - 1;
    let unary = |x: Option<u8>| x.is_none_or(|x| cmp_holds(sym, x, c.unwrap()));
    let binary = |x: Option<u8>, y: Option<u8>| match (x, y) {
        (Some(x), Some(y)) => cmp_holds(sym, x, y),
        _ => true,
    };
    match p.template() {
        Template::InitialState => unary(s[0]),
        Template::FinalState => unary(s[last]),
        Template::ConstantAcrossFrames => s.iter().all(|&x| unary(x)),
        Template::ConsecutiveRelation => s.windows(2).all(|w| binary(w[0], w[1])),
        Template::StartEndRelation => binary(s[0], s[last]),
    }
}

/// Every well-formed pattern over `f` (a QDC function).
pub fn all_qdc_patterns(f: &FeatureFunction) -> Vec<Pattern> {
    assert_eq!(f.kind, FeatureKind::Qdc);
    let mut out = Vec::new();
    for cmp in Comparator::ALL {
        for b in 0..4u8 {
            let v = FeatureValue::Qdc(QdcBand(b));
            out.extend(Pattern::initial(f.clone(), cmp, v));
            out.extend(Pattern::final_state(f.clone(), cmp, v));
            out.extend(Pattern::constant(f.clone(), cmp, v));
        }
        out.extend(Pattern::consecutive(f.clone(), cmp));
        out.extend(Pattern::start_end(f.clone(), cmp));
    }
    out
}

/// Truth table of `p` over `all_sequences()`, one bit per sequence.
pub fn truth_bits(p: &Pattern, seqs: &[Seq]) -> Vec<u64> {
    let mut bits = vec![0u64; seqs.len().div_ceil(64)];
    for (i, s) in seqs.iter().enumerate() {
        if truth(p, s) {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

pub fn implies(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

pub fn all_true(a: &[u64], n: usize) -> bool {
    (0..n).all(|i| a[i / 64] & (1 << (i % 64)) != 0)
}
