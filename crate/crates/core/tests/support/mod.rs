#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIXTURE_SEED: u64 = 20_240_321;

const SUBJECTS: [&str; 6] = ["我们", "他们", "老师", "学生们", "妈妈", "小明"];
const ADVERBS: [&str; 4] = ["每天", "经常", "常常", "周末"];
const PREDICATES: [&str; 6] = [
    "去商店买水果",
    "在家里看书",
    "在公园里散步",
    "认真地写作业",
    "和朋友一起吃饭",
    "去学校上课",
];
/// Units a careless writer substitutes in; none occur in the clean text.
const ERROR_POOL: [char; 6] = ['卖', '再', '坐', '得', '那', '块'];
/// Units an over-eager corrector inserts or swaps in; also outside the clean text.
const SPURIOUS_POOL: [char; 5] = ['侬', '哦', '嘛', '呗', '咯'];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/overcorrection")
}

/// Every subject/adverb/predicate combination, one per line.
pub fn clean_text() -> Vec<String> {
    let mut out = Vec::new();
    for s in SUBJECTS {
        for a in ADVERBS {
            for p in PREDICATES {
                out.push(format!("{s}{a}{p}。"));
            }
        }
    }
    out
}

/// `(source, system output, gold)` rows.
///
/// Each gold sentence is a clean sentence; the source carries one injected
/// substitution error. The simulated system fixes that error in most rows
/// (and misses it in some) and adds zero to two spurious edits at least two
/// units away from the error and from each other, so the edits never touch.
pub fn eval_rows(n: usize) -> Vec<(String, String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(FIXTURE_SEED);
    let clean = clean_text();
    let vocab: HashSet<char> = clean.iter().flat_map(|s| s.chars()).collect();
    assert!(ERROR_POOL.iter().chain(&SPURIOUS_POOL).all(|c| !vocab.contains(c)));

    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let gold: Vec<char> = clean.choose(&mut rng).unwrap().chars().collect();
        // Never touch the final full stop.
        let body = gold.len() - 1;
        let err_pos = rng.gen_range(0..body);
        let mut src = gold.clone();
        src[err_pos] = *ERROR_POOL.choose(&mut rng).unwrap();

        let fixes_error = rng.gen_bool(0.9);
        let n_spurious = match rng.gen_range(0..20) {
            0..=2 => 0,
            3..=16 => 1,
            _ => 2,
        };
        let mut taken = vec![err_pos];
        let mut spurious = Vec::new();
        for _ in 0..n_spurious {
            let free: Vec<usize> = (0..body)
                .filter(|p| taken.iter().all(|t| p.abs_diff(*t) >= 2))
                .collect();
            if let Some(&pos) = free.choose(&mut rng) {
                taken.push(pos);
                spurious.push((pos, *SPURIOUS_POOL.choose(&mut rng).unwrap(), rng.gen_bool(0.5)));
            }
        }
        spurious.sort_unstable_by_key(|s| std::cmp::Reverse(s.0));

        let mut system = src.clone();
        if fixes_error {
            system[err_pos] = gold[err_pos];
        }
        // Right to left so earlier positions stay valid.
        for (pos, unit, insert) in spurious {
            if insert {
                system.insert(pos + 1, unit);
            } else {
                system[pos] = unit;
            }
        }
        rows.push((
            src.into_iter().collect(),
            system.into_iter().collect(),
            gold.into_iter().collect(),
        ));
    }
    rows
}

pub fn eval_tsv(rows: &[(String, String, String)]) -> String {
    rows.iter().map(|(s, h, g)| format!("{s}\t{h}\t{g}\n")).collect()
}

pub fn clean_txt() -> String {
    clean_text().iter().map(|s| format!("{s}\n")).collect()
}

pub fn parse_eval_tsv(text: &str) -> Vec<(String, String, String)> {
    text.lines()
        .map(|l| {
            let cols: Vec<&str> = l.split('\t').collect();
            assert_eq!(cols.len(), 3, "bad fixture row {l:?}");
            (cols[0].to_string(), cols[1].to_string(), cols[2].to_string())
        })
        .collect()
}

/// Independent Levenshtein distance (full matrix).
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Mixed CJK/ASCII alphabet for random sentences.
pub const ALPHABET: [char; 16] = [
    'a', 'b', 'c', 'x', 'y', 'Z', '1', '-', '的', '了', '是', '在', '我', '们', '中', '国',
];

pub fn random_sentence(rng: &mut impl Rng, max_len: usize) -> Vec<char> {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

/// Applies `count` random unit edits (substitute/insert/delete) to `base`.
pub fn inject_edits(rng: &mut impl Rng, base: &[char], count: usize) -> Vec<char> {
    let mut out = base.to_vec();
    for _ in 0..count {
        match rng.gen_range(0..3) {
            0 if !out.is_empty() => {
                let p = rng.gen_range(0..out.len());
                out[p] = *ALPHABET.choose(rng).unwrap();
            }
            1 if !out.is_empty() => {
                let p = rng.gen_range(0..out.len());
                out.remove(p);
            }
            _ => {
                let p = rng.gen_range(0..=out.len());
                out.insert(p, *ALPHABET.choose(rng).unwrap());
            }
        }
    }
    out
}
