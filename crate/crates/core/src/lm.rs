//! Sentence scoring by negative log-likelihood.
//!
//! Everything downstream compares perplexities under one fixed scorer, so the
//! scorer is a trait: [`CharNgramLm`] is the built-in add-k character model
//! and [`ExternalScorer`] talks to a long-running child process.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use thiserror::Error;

use crate::text::Sentence;

pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_SMOOTH_K: f64 = 0.1;
const MODEL_HEADER: &str = "#lmcomb-ngram\tv1";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("invalid language model configuration: {0}")]
    Config(String),
    #[error("perplexity undefined for zero tokens")]
    ZeroTokens,
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("external scorer: {0}")]
    Scorer(String),
    #[error("external scorer i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Total negative log-likelihood (nats) over `tokens` prediction events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NllScore {
    pub nll: f64,
    pub tokens: usize,
}

impl NllScore {
    pub fn perplexity(&self) -> Result<f64, LmError> {
        perplexity(self.nll, self.tokens)
    }
}

pub trait LmScorer: Send + Sync {
    fn score(&self, sentence: &Sentence) -> Result<NllScore, LmError>;

    fn perplexity(&self, sentence: &Sentence) -> Result<f64, LmError> {
        self.score(sentence)?.perplexity()
    }
}

impl<T: LmScorer + ?Sized> LmScorer for &T {
    fn score(&self, sentence: &Sentence) -> Result<NllScore, LmError> {
        (**self).score(sentence)
    }
}

impl<T: LmScorer + ?Sized> LmScorer for Box<T> {
    fn score(&self, sentence: &Sentence) -> Result<NllScore, LmError> {
        (**self).score(sentence)
    }
}

pub fn sentence_nll(scorer: &dyn LmScorer, sentence: &Sentence) -> Result<NllScore, LmError> {
    scorer.score(sentence)
}

/// `exp(nll / tokens)`.
pub fn perplexity(nll: f64, tokens: usize) -> Result<f64, LmError> {
    if tokens == 0 {
        return Err(LmError::ZeroTokens);
    }
    Ok((nll / tokens as f64).exp())
}

type Sym = u32;
const BOS: Sym = 0;
const EOS: Sym = 1;
const UNK: Sym = 2;
const FIRST_UNIT: Sym = 3;

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextStats {
    total: u64,
    next: HashMap<Sym, u64>,
}

/// Add-k smoothed character n-gram model.
///
/// Each sentence is padded with `order - 1` start symbols and closed by one
/// end symbol. Outcomes are the observed units, the end symbol, and a single
/// unknown slot that absorbs units never seen in training, so every unit has
/// nonzero probability and each context distribution sums to one:
/// `p(w | ctx) = (c(ctx, w) + k) / (c(ctx) + k * V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharNgramLm {
    order: usize,
    smooth_k: f64,
    units: HashMap<char, Sym>,
    contexts: HashMap<Vec<Sym>, ContextStats>,
}

impl CharNgramLm {
    pub fn train<'a, I>(corpus: I, order: usize, smooth_k: f64) -> Result<Self, LmError>
    where
        I: IntoIterator<Item = &'a Sentence>,
    {
        check_params(order, smooth_k)?;
        let mut lm = Self {
            order,
            smooth_k,
            units: HashMap::new(),
            contexts: HashMap::new(),
        };
        let mut seen_any = false;
        for sentence in corpus {
            seen_any = true;
            let syms: Vec<Sym> = sentence
                .units()
                .iter()
                .map(|c| {
                    let next = FIRST_UNIT + lm.units.len() as Sym;
                    *lm.units.entry(*c).or_insert(next)
                })
                .collect();
            let padded = lm.pad(&syms);
            for window in padded.windows(order) {
                lm.add_count(&window[..order - 1], window[order - 1], 1);
            }
        }
        if !seen_any {
            return Err(LmError::Config("empty training corpus".into()));
        }
        Ok(lm)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smooth_k(&self) -> f64 {
        self.smooth_k
    }

    /// Same counts with a different smoothing constant.
    pub fn with_smoothing(&self, smooth_k: f64) -> Result<Self, LmError> {
        check_params(self.order, smooth_k)?;
        Ok(Self {
            smooth_k,
            ..self.clone()
        })
    }

    /// Number of outcomes each context distributes mass over.
    pub fn outcome_count(&self) -> usize {
        self.units.len() + 2
    }

    /// Observed units in first-seen order.
    pub fn vocabulary(&self) -> Vec<char> {
        let mut v: Vec<(Sym, char)> = self.units.iter().map(|(c, s)| (*s, *c)).collect();
        v.sort_unstable();
        v.into_iter().map(|(_, c)| c).collect()
    }

    /// Raw count of `next` after `context` (a string of exactly `order - 1`
    /// units; `None` in either position stands for start pad / end symbol).
    pub fn count(&self, context: &[Option<char>], next: Option<char>) -> u64 {
        let ctx: Option<Vec<Sym>> = context
            .iter()
            .map(|c| match c {
                None => Some(BOS),
                Some(c) => self.units.get(c).copied(),
            })
            .collect();
        let next = match next {
            None => Some(EOS),
            Some(c) => self.units.get(&c).copied(),
        };
        match (ctx, next) {
            (Some(ctx), Some(next)) => self
                .contexts
                .get(&ctx)
                .and_then(|s| s.next.get(&next))
                .copied()
                .unwrap_or(0),
            _ => 0,
        }
    }

    /// Probability of `next` given the text before it (only the last
    /// `order - 1` units matter; missing history is start padding). `None`
    /// asks for the end symbol.
    pub fn prob(&self, history: &[char], next: Option<char>) -> f64 {
        let mut syms: Vec<Sym> = history.iter().map(|c| self.sym(*c)).collect();
        let mut ctx = vec![BOS; (self.order - 1).saturating_sub(syms.len())];
        let keep = syms.len().saturating_sub(self.order - 1);
        ctx.extend(syms.drain(keep..));
        self.prob_sym(&ctx, next.map_or(EOS, |c| self.sym(c)))
    }

    /// Distribution over all outcomes for the context ending `history`;
    /// the unknown slot is last.
    pub fn distribution(&self, history: &[char]) -> Vec<f64> {
        let mut vocab: Vec<Option<char>> = self.vocabulary().into_iter().map(Some).collect();
        vocab.push(None);
        let mut probs: Vec<f64> = vocab.iter().map(|n| self.prob(history, *n)).collect();
        let unseen = self.unknown_char();
        probs.push(self.prob(history, Some(unseen)));
        probs
    }

    fn unknown_char(&self) -> char {
        ('\u{E000}'..='\u{F8FF}')
            .find(|c| !self.units.contains_key(c))
            .expect("private use area exhausted")
    }

    fn sym(&self, c: char) -> Sym {
        self.units.get(&c).copied().unwrap_or(UNK)
    }

    fn pad(&self, syms: &[Sym]) -> Vec<Sym> {
        let mut padded = vec![BOS; self.order - 1];
        padded.extend_from_slice(syms);
        padded.push(EOS);
        padded
    }

    fn add_count(&mut self, ctx: &[Sym], next: Sym, n: u64) {
        let stats = match self.contexts.get_mut(ctx) {
            Some(stats) => stats,
            None => self.contexts.entry(ctx.to_vec()).or_default(),
        };
        stats.total += n;
        *stats.next.entry(next).or_insert(0) += n;
    }

    fn prob_sym(&self, ctx: &[Sym], next: Sym) -> f64 {
        let v = self.outcome_count() as f64;
        let k = self.smooth_k;
        match self.contexts.get(ctx) {
            Some(stats) => {
                let c = if next == UNK {
                    0
                } else {
                    stats.next.get(&next).copied().unwrap_or(0)
                };
                (c as f64 + k) / (stats.total as f64 + k * v)
            }
            None => 1.0 / v,
        }
    }

    /// Writes the model: a versioned header line, then one `gram<TAB>count`
    /// line per n-gram in sorted order.
    pub fn to_model_string(&self) -> String {
        let names: HashMap<Sym, char> = self.units.iter().map(|(c, s)| (*s, *c)).collect();
        let encode = |s: Sym| -> String {
            match s {
                BOS => "<s>".to_string(),
                EOS => "</s>".to_string(),
                _ => encode_unit(names[&s]),
            }
        };
        let mut lines = BTreeMap::new();
        for (ctx, stats) in &self.contexts {
            for (next, count) in &stats.next {
                let gram: Vec<String> = ctx.iter().chain(std::iter::once(next)).map(|s| encode(*s)).collect();
                lines.insert(gram.join(" "), *count);
            }
        }
        let mut out = format!("{MODEL_HEADER}\torder={}\tk={}\n", self.order, self.smooth_k);
        for (gram, count) in lines {
            out.push_str(&format!("{gram}\t{count}\n"));
        }
        out
    }

    pub fn from_model_string(text: &str) -> Result<Self, LmError> {
        let mut lines = text.lines().enumerate();
        let format_err = |line: usize, message: String| LmError::Format { line, message };
        let (_, header) = lines.next().ok_or_else(|| format_err(1, "missing header".into()))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 4 || format!("{}\t{}", fields[0], fields[1]) != MODEL_HEADER {
            return Err(format_err(1, format!("unrecognized header {header:?}")));
        }
        let order: usize = fields[2]
            .strip_prefix("order=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| format_err(1, format!("bad order field {:?}", fields[2])))?;
        let smooth_k: f64 = fields[3]
            .strip_prefix("k=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| format_err(1, format!("bad smoothing field {:?}", fields[3])))?;
        check_params(order, smooth_k)?;
        let mut lm = Self {
            order,
            smooth_k,
            units: HashMap::new(),
            contexts: HashMap::new(),
        };
        // Units get ids in order of first appearance as a predicted symbol so
        // that the vocabulary does not depend on file order beyond sorting.
        let mut grams = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let (gram, count) = line
                .split_once('\t')
                .ok_or_else(|| format_err(line_no, "expected gram<TAB>count".into()))?;
            let count: u64 = count
                .parse()
                .map_err(|_| format_err(line_no, format!("bad count {count:?}")))?;
            let tokens: Vec<Option<Option<char>>> = gram.split(' ').map(decode_unit).collect();
            if tokens.len() != order || tokens.iter().any(Option::is_none) {
                return Err(format_err(line_no, format!("bad n-gram {gram:?}")));
            }
            grams.push((tokens.into_iter().flatten().collect::<Vec<_>>(), count));
        }
        for (tokens, _) in &grams {
            for t in tokens.iter().flatten() {
                let next = FIRST_UNIT + lm.units.len() as Sym;
                lm.units.entry(*t).or_insert(next);
            }
        }
        for (tokens, count) in grams {
            let syms: Vec<Sym> = tokens
                .iter()
                .enumerate()
                .map(|(i, t)| match t {
                    None if i + 1 == tokens.len() => EOS,
                    None => BOS,
                    Some(c) => lm.units[c],
                })
                .collect();
            lm.add_count(&syms[..order - 1], syms[order - 1], count);
        }
        Ok(lm)
    }

    /// Relabels units so ids follow sorted character order. Two models with
    /// the same counts compare equal after this.
    pub fn canonical(&self) -> Self {
        Self::from_model_string(&self.to_model_string()).expect("model round trip")
    }
}

fn check_params(order: usize, smooth_k: f64) -> Result<(), LmError> {
    if order < 1 {
        return Err(LmError::Config(format!("order must be >= 1, got {order}")));
    }
    if !(smooth_k > 0.0 && smooth_k.is_finite()) {
        return Err(LmError::Config(format!(
            "smoothing constant must be > 0, got {smooth_k}"
        )));
    }
    Ok(())
}

fn encode_unit(c: char) -> String {
    if c.is_whitespace() || c.is_control() || c == '\\' || c == '<' {
        format!("\\u{{{:x}}}", c as u32)
    } else {
        c.to_string()
    }
}

/// `Some(None)` is a boundary symbol, `Some(Some(c))` a unit.
fn decode_unit(token: &str) -> Option<Option<char>> {
    match token {
        "<s>" | "</s>" => Some(None),
        _ => {
            if let Some(hex) = token.strip_prefix("\\u{").and_then(|t| t.strip_suffix('}')) {
                return u32::from_str_radix(hex, 16).ok().and_then(char::from_u32).map(Some);
            }
            let mut chars = token.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Some(Some(c)),
                _ => None,
            }
        }
    }
}

impl LmScorer for CharNgramLm {
    fn score(&self, sentence: &Sentence) -> Result<NllScore, LmError> {
        let syms: Vec<Sym> = sentence.units().iter().map(|c| self.sym(*c)).collect();
        let padded = self.pad(&syms);
        let nll = padded
            .windows(self.order)
            .map(|w| -self.prob_sym(&w[..self.order - 1], w[self.order - 1]).ln())
            .sum();
        Ok(NllScore {
            nll,
            tokens: sentence.len() + 1,
        })
    }
}

/// Scorer backed by a child process: one sentence per stdin line, one
/// `<nll_total> <token_count>` line back per sentence, in order.
pub struct ExternalScorer {
    io: Mutex<ScorerIo>,
}

struct ScorerIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalScorer {
    /// Spawns `command` through `sh -c`.
    pub fn spawn(command: &str) -> Result<Self, LmError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            io: Mutex::new(ScorerIo { child, stdin, stdout }),
        })
    }
}

impl LmScorer for ExternalScorer {
    fn score(&self, sentence: &Sentence) -> Result<NllScore, LmError> {
        let text = sentence.to_string();
        if text.contains('\n') || text.contains('\r') {
            return Err(LmError::Scorer("sentence contains a line break".into()));
        }
        let mut io = self
            .io
            .lock()
            .map_err(|_| LmError::Scorer("scorer lock poisoned".into()))?;
        writeln!(io.stdin, "{text}")?;
        io.stdin.flush()?;
        let mut line = String::new();
        if io.stdout.read_line(&mut line)? == 0 {
            let status = io.child.wait()?;
            return Err(LmError::Scorer(format!("process exited ({status}) before answering")));
        }
        parse_score_line(line.trim_end())
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Ok(io) = self.io.get_mut() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}

fn parse_score_line(line: &str) -> Result<NllScore, LmError> {
    let bad = || LmError::Scorer(format!("malformed response {line:?}, expected '<nll> <count>'"));
    let mut parts = line.split_whitespace();
    let (nll, tokens) = match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), None) => (a, b),
        _ => return Err(bad()),
    };
    let nll: f64 = nll.parse().map_err(|_| bad())?;
    let tokens: usize = tokens.parse().map_err(|_| bad())?;
    if !(nll >= 0.0 && nll.is_finite()) || tokens == 0 {
        return Err(bad());
    }
    Ok(NllScore { nll, tokens })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(texts: &[&str]) -> Vec<Sentence> {
        texts.iter().map(|t| Sentence::from(*t)).collect()
    }

    #[test]
    fn unigram_hand_counts() {
        let lm = CharNgramLm::train(&corpus(&["ab"]), 1, 0.1).unwrap();
        assert_eq!(lm.count(&[], Some('a')), 1);
        assert_eq!(lm.count(&[], Some('b')), 1);
        assert_eq!(lm.count(&[], None), 1);
        assert_eq!(lm.vocabulary(), vec!['a', 'b']);
    }

    #[test]
    fn bigram_hand_counts() {
        let lm = CharNgramLm::train(&corpus(&["ababab"]), 2, 0.1).unwrap();
        assert_eq!(lm.count(&[Some('a')], Some('b')), 3);
        assert_eq!(lm.count(&[Some('b')], Some('a')), 2);
        assert_eq!(lm.count(&[Some('b')], None), 1);
        assert_eq!(lm.count(&[None], Some('a')), 1);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = corpus(&["ab"]);
        assert!(matches!(CharNgramLm::train(&c, 2, 0.0), Err(LmError::Config(_))));
        assert!(matches!(CharNgramLm::train(&c, 0, 0.1), Err(LmError::Config(_))));
        assert!(matches!(CharNgramLm::train(&[], 2, 0.1), Err(LmError::Config(_))));
    }

    #[test]
    fn perplexity_examples() {
        assert_eq!(perplexity(0.0, 5).unwrap(), 1.0);
        assert!((perplexity(8f64.ln() * 4.0, 4).unwrap() - 8.0).abs() < 1e-12);
        assert!(matches!(perplexity(1.0, 0), Err(LmError::ZeroTokens)));
    }

    #[test]
    fn unseen_context_is_uniform() {
        // Trained on "x" only; context "y" never occurs, so every event in
        // "yy" after the first is uniform over V = |{x}| + end + unknown = 3.
        let lm = CharNgramLm::train(&corpus(&["x"]), 2, 0.5).unwrap();
        assert_eq!(lm.outcome_count(), 3);
        assert!((lm.prob(&['y'], Some('y')) - 1.0 / 3.0).abs() < 1e-12);
        assert!((lm.prob(&['y'], None) - 1.0 / 3.0).abs() < 1e-12);
        // Empty sentence: one end event.
        let s = lm.score(&Sentence::from("")).unwrap();
        assert_eq!(s.tokens, 1);
    }

    #[test]
    fn uniform_model_perplexity_equals_outcome_count() {
        // Order-2 model over contexts never seen: every event costs ln V.
        let lm = CharNgramLm::train(&corpus(&["ab"]), 2, 0.1).unwrap();
        let v = lm.outcome_count() as f64;
        let sent = Sentence::from("ZZZZ");
        let score = lm.score(&sent).unwrap();
        // First event has a seen context (<s>), so measure only the tail.
        let tail: f64 = (1..=4)
            .map(|i| -lm.prob(&sent.units()[..i], if i < 4 { Some('Z') } else { None }).ln())
            .sum();
        assert!((tail - 4.0 * v.ln()).abs() < 1e-9);
        assert_eq!(score.tokens, 5);
    }

    #[test]
    fn in_pattern_transitions_are_likely() {
        let text = "ab".repeat(50);
        let lm = CharNgramLm::train(&corpus(&[&text]), 2, 0.1).unwrap();
        // count(b|a) = 50, c(a) = 50, V = 4: (50 + 0.1) / (50 + 0.4)
        let expected = 50.1 / 50.4;
        assert!((lm.prob(&['a'], Some('b')) - expected).abs() < 1e-12);
        // count(a|b) = 49 of c(b) = 50 (last b is followed by the end).
        assert!((lm.prob(&['b'], Some('a')) - 49.1 / 50.4).abs() < 1e-12);
    }

    #[test]
    fn distributions_normalize() {
        let lm = CharNgramLm::train(&corpus(&["我喜欢吃苹果", "你喜欢吃香蕉", "abc"]), 3, 0.1).unwrap();
        for history in [&[][..], &['我'][..], &['喜', '欢'][..], &['q', 'q'][..]] {
            let total: f64 = lm.distribution(history).iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "{total}");
        }
    }

    #[test]
    fn model_file_round_trip() {
        let lm = CharNgramLm::train(&corpus(&["a b\tc", "<\\>", "冬阴功"]), 3, 0.25).unwrap();
        let text = lm.to_model_string();
        assert!(text.starts_with("#lmcomb-ngram\tv1\torder=3\tk=0.25\n"));
        let back = CharNgramLm::from_model_string(&text).unwrap();
        assert_eq!(back.to_model_string(), text);
        for s in ["a b", "冬阴", "zzz", ""] {
            let s = Sentence::from(s);
            assert_eq!(lm.score(&s).unwrap(), back.score(&s).unwrap());
        }
    }

    #[test]
    fn model_file_errors() {
        assert!(matches!(
            CharNgramLm::from_model_string("nope\n"),
            Err(LmError::Format { line: 1, .. })
        ));
        let bad = format!("{MODEL_HEADER}\torder=2\tk=0.1\n<s> a\tx\n");
        assert!(matches!(
            CharNgramLm::from_model_string(&bad),
            Err(LmError::Format { line: 2, .. })
        ));
        let bad = format!("{MODEL_HEADER}\torder=2\tk=0.1\n<s> a b\t1\n");
        assert!(matches!(
            CharNgramLm::from_model_string(&bad),
            Err(LmError::Format { line: 2, .. })
        ));
    }

    #[test]
    fn parses_scorer_responses() {
        assert_eq!(parse_score_line("3.5 4").unwrap(), NllScore { nll: 3.5, tokens: 4 });
        assert!(parse_score_line("3.5").is_err());
        assert!(parse_score_line("-1 4").is_err());
        assert!(parse_score_line("1 0").is_err());
        assert!(parse_score_line("x 1").is_err());
    }

    #[test]
    fn external_scorer_round_trip() {
        // Echoes "<length> <length + 1>" for each line.
        let scorer = ExternalScorer::spawn(
            "while IFS= read -r line; do n=$(printf '%s' \"$line\" | wc -m); echo \"$n $((n + 1))\"; done",
        )
        .unwrap();
        let s = scorer.score(&Sentence::from("abc")).unwrap();
        assert_eq!(s, NllScore { nll: 3.0, tokens: 4 });
        let s = scorer.score(&Sentence::from("")).unwrap();
        assert_eq!(s, NllScore { nll: 0.0, tokens: 1 });
    }

    #[test]
    fn external_scorer_failure() {
        let scorer = ExternalScorer::spawn("exit 3").unwrap();
        assert!(matches!(
            scorer.score(&Sentence::from("abc")),
            Err(LmError::Scorer(_)) | Err(LmError::Io(_))
        ));
        let scorer = ExternalScorer::spawn("while read -r l; do echo garbage; done").unwrap();
        assert!(matches!(scorer.score(&Sentence::from("abc")), Err(LmError::Scorer(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn texts() -> impl Strategy<Value = Vec<Sentence>> {
            proptest::collection::vec(
                proptest::collection::vec(prop_oneof![Just('a'), Just('b'), Just('c'), Just('的')], 0..12)
                    .prop_map(Sentence::new),
                1..6,
            )
        }

        fn kl_to_uniform(p: &[f64]) -> f64 {
            let u = 1.0 / p.len() as f64;
            p.iter().map(|pi| pi * (pi / u).ln()).sum()
        }

        proptest! {
            #[test]
            fn normalized_and_smoothing_monotone(
                corpus in texts(),
                order in 1usize..4,
                history in proptest::collection::vec(prop_oneof![Just('a'), Just('b'), Just('z')], 0..3),
            ) {
                let lm = CharNgramLm::train(&corpus, order, 0.05).unwrap();
                let mut last = f64::INFINITY;
                for k in [0.05, 0.1, 0.5, 1.0, 4.0] {
                    let dist = lm.with_smoothing(k).unwrap().distribution(&history);
                    let total: f64 = dist.iter().sum();
                    prop_assert!((total - 1.0).abs() < 1e-9);
                    prop_assert!(dist.iter().all(|p| *p > 0.0));
                    let kl = kl_to_uniform(&dist);
                    prop_assert!(kl <= last + 1e-12);
                    last = kl;
                }
            }

            #[test]
            fn perplexity_at_least_one_and_deterministic(corpus in texts(), probe in texts()) {
                let lm = CharNgramLm::train(&corpus, 3, 0.1).unwrap();
                for s in &probe {
                    let a = lm.score(s).unwrap();
                    prop_assert_eq!(a, lm.score(s).unwrap());
                    prop_assert!(a.nll >= 0.0);
                    prop_assert_eq!(a.tokens, s.len() + 1);
                    prop_assert!(a.perplexity().unwrap() >= 1.0);
                }
            }
        }
    }
}
