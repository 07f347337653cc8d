//! Brute-force reference implementations and random generators shared by
//! the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use isle_core::corpus::{CorpusInput, CorpusSnapshot, PaperInput, ValidationPolicy};
use isle_core::math::{self, SeededRng};
use isle_core::retrieval::{RankedList, RankingSource};
use isle_core::text::{analyze, AnalyzerConfig};

pub const K1: f64 = 1.2;
pub const B: f64 = 0.75;
pub const TITLE_WEIGHT: f64 = 2.0;
pub const ABSTRACT_WEIGHT: f64 = 1.0;
pub const PHRASE_BONUS: f64 = 1.5;

pub fn rng_below(rng: &mut SeededRng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Pronounceable pseudo-words that the default analyzer keeps unchanged.
pub fn word_list(rng: &mut SeededRng, n: usize) -> Vec<String> {
    const CONS: &[u8] = b"bdfgklmnprtvz";
    const VOWELS: &[u8] = b"aiou";
    let cfg = AnalyzerConfig::default();
    let mut out = BTreeSet::new();
    while out.len() < n {
        let syllables = 2 + rng_below(rng, 3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(CONS[rng_below(rng, CONS.len())] as char);
            w.push(VOWELS[rng_below(rng, VOWELS.len())] as char);
        }
        w.push(CONS[rng_below(rng, CONS.len())] as char);
        if analyze(&w, &cfg) == vec![w.clone()] {
            out.insert(w);
        }
    }
    out.into_iter().collect()
}

pub fn paper(id: &str, title: &str, abstract_text: &str, year: i64) -> PaperInput {
    PaperInput {
        paper_id: id.to_string(),
        title: title.to_string(),
        abstract_text: abstract_text.to_string(),
        publication_year: Some(year),
        ..PaperInput::default()
    }
}

/// Random corpus of `n_docs` documents over a `vocab`-word vocabulary with
/// skewed term frequencies.
pub fn random_corpus(seed: u64, n_docs: usize, vocab: usize) -> (CorpusSnapshot, Vec<String>) {
    let mut rng = SeededRng::new(seed);
    let words = word_list(&mut rng, vocab);
    let pick = |rng: &mut SeededRng| {
        // Squaring skews draws toward the head of the list.
        let u = rng.next_open01();
        words[((u * u) * words.len() as f64) as usize % words.len()].clone()
    };
    let papers = (0..n_docs)
        .map(|i| {
            let tl = 1 + rng_below(&mut rng, 8);
            let al = rng_below(&mut rng, 60);
            let title: Vec<String> = (0..tl).map(|_| pick(&mut rng)).collect();
            let abs: Vec<String> = (0..al).map(|_| pick(&mut rng)).collect();
            paper(&format!("doc{i:03}"), &title.join(" "), &abs.join(" "), 2000 + (i % 20) as i64)
        })
        .collect();
    let input = CorpusInput { papers, ..CorpusInput::default() };
    (CorpusSnapshot::assemble(input, ValidationPolicy::Strict).unwrap().0, words)
}

/// Restricted Damerau-Levenshtein (optimal string alignment) distance.
pub fn osa_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                d[i][j] = d[i][j].min(d[i - 2][j - 2] + 1);
            }
        }
    }
    d[a.len()][b.len()]
}

/// Evaluates the field-weighted BM25 sum per (document, query term) from
/// raw token lists and returns `(paper_id, score)` in ranked order.
pub fn bm25_brute_force(snapshot: &CorpusSnapshot, query_tokens: &[String], fuzzy: bool) -> Vec<(String, f64)> {
    let cfg = AnalyzerConfig::default();
    let docs: Vec<(String, Vec<String>, Vec<String>)> = snapshot
        .papers()
        .map(|p| (p.paper_id.clone(), analyze(&p.title, &cfg), analyze(&p.abstract_text, &cfg)))
        .collect();
    let n = docs.len();
    let all_terms: BTreeSet<&String> = docs.iter().flat_map(|(_, t, a)| t.iter().chain(a.iter())).collect();

    let mut resolved: Vec<(String, f64)> = Vec::new();
    for q in query_tokens {
        if all_terms.contains(q) {
            resolved.push((q.clone(), 1.0));
        } else if fuzzy && q.chars().count() >= 5 {
            let near: Vec<&String> = all_terms.iter().copied().filter(|t| osa_distance(q, t) == 1).take(10).collect();
            resolved.extend(near.into_iter().map(|t| (t.clone(), 0.5)));
        }
    }

    let field_stats = |field: usize| {
        let lens: Vec<usize> = docs.iter().map(|d| if field == 0 { d.1.len() } else { d.2.len() }).collect();
        let avgdl = lens.iter().sum::<usize>() as f64 / n as f64;
        (lens, avgdl)
    };
    let stats = [field_stats(0), field_stats(1)];

    let mut out = Vec::new();
    for (doc, (id, title, abs)) in docs.iter().enumerate() {
        let fields = [title, abs];
        let mut sums = [0.0f64; 2];
        let mut matched = false;
        for (term, factor) in &resolved {
            for f in 0..2 {
                let tf = fields[f].iter().filter(|t| *t == term).count();
                if tf == 0 {
                    continue;
                }
                matched = true;
                let df = docs.iter().filter(|d| if f == 0 { d.1.contains(term) } else { d.2.contains(term) }).count();
                let idf = math::ln(1.0 + (n as f64 - df as f64 + 0.5) / (df as f64 + 0.5)) * factor;
                let (lens, avgdl) = &stats[f];
                let tf = tf as f64;
                let norm = K1 * (1.0 - B + B * lens[doc] as f64 / avgdl);
                sums[f] += idf * tf * (K1 + 1.0) / (tf + norm);
            }
        }
        if !matched {
            continue;
        }
        let phrase = query_tokens.len() >= 2 && title.windows(query_tokens.len()).any(|w| w == query_tokens);
        let bonus = if phrase { PHRASE_BONUS } else { 1.0 };
        out.push((id.clone(), TITLE_WEIGHT * sums[0] * bonus + ABSTRACT_WEIGHT * sums[1]));
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Random query of one to four tokens: indexed words, near-misses and
/// unknown words, sometimes lifted verbatim from a title.
pub fn random_query(rng: &mut SeededRng, snapshot: &CorpusSnapshot, words: &[String]) -> Vec<String> {
    let cfg = AnalyzerConfig::default();
    if rng_below(rng, 4) == 0 {
        let p = snapshot.paper_at(rng_below(rng, snapshot.paper_count()));
        let t = analyze(&p.title, &cfg);
        if t.len() >= 2 {
            let start = rng_below(rng, t.len() - 1);
            let len = 2 + rng_below(rng, (t.len() - start - 1).min(2));
            return t[start..start + len].to_vec();
        }
    }
    let len = 1 + rng_below(rng, 4);
    (0..len)
        .map(|_| {
            let w = words[rng_below(rng, words.len())].clone();
            match rng_below(rng, 5) {
                0 => {
                    let mut c: Vec<char> = w.chars().collect();
                    let i = rng_below(rng, c.len());
                    c[i] = if c[i] == 'x' { 'y' } else { 'x' };
                    c.into_iter().collect()
                }
                1 => String::from("qqqqzzz"),
                _ => w,
            }
        })
        .collect()
}

/// Random ranked list over `pool` ids of at most `max_len` entries.
pub fn random_ranked_list(rng: &mut SeededRng, pool: usize, max_len: usize, source: RankingSource) -> RankedList {
    let len = rng_below(rng, max_len + 1).min(pool);
    let mut ids: Vec<usize> = (0..pool).collect();
    for i in 0..len {
        let j = i + rng_below(rng, pool - i);
        ids.swap(i, j);
    }
    RankedList::from_scored(ids[..len].iter().map(|i| (format!("p{i:03}"), (len - 1) as f64)), source)
}

/// Exhaustive fusion: every id's score summed list by list.
pub fn rrf_exhaustive(lists: &[RankedList], k: usize) -> Vec<(String, f64)> {
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    for l in lists {
        ids.extend(l.entries.iter().map(|e| e.paper_id.as_str()));
    }
    let mut out: Vec<(String, f64, usize)> = ids
        .into_iter()
        .map(|id| {
            let mut score = 0.0;
            let mut best = usize::MAX;
            for l in lists {
                if let Some(pos) = l.entries.iter().position(|e| e.paper_id == id) {
                    score += 1.0 / (k as f64 + (pos + 1) as f64);
                    best = best.min(pos + 1);
                }
            }
            (id.to_string(), score, best)
        })
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.2.cmp(&b.2)).then_with(|| a.0.cmp(&b.0)));
    out.into_iter().map(|(id, s, _)| (id, s)).collect()
}

/// Cosine of raw vectors, no normalization shortcut.
pub fn raw_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Every (id, vector) sorted by raw cosine to `query`, ties by id.
pub fn knn_full_sort(vectors: &[(String, Vec<f64>)], query: &[f64]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = vectors
        .iter()
        .filter(|(_, v)| v.iter().any(|x| *x != 0.0))
        .map(|(id, v)| (id.clone(), raw_cosine(v, query)))
        .collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

pub fn gaussian_vector(rng: &mut SeededRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.next_gaussian()).collect()
}

/// TF-IDF by two explicit passes: document frequencies first, then per-cell
/// counts. Terms are every distinct token, sorted.
pub fn tfidf_two_pass(docs: &[Vec<String>]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in docs {
        let seen: BTreeSet<&str> = d.iter().map(String::as_str).collect();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
    let n = docs.len() as f64;
    let rows = docs
        .iter()
        .map(|d| {
            terms
                .iter()
                .map(|t| {
                    let tf = d.iter().filter(|x| *x == t).count() as f64;
                    tf * (n / df[t.as_str()] as f64).ln()
                })
                .collect()
        })
        .collect();
    (terms, rows)
}

/// NPMI of one pair from document sets, straight from the definition.
pub fn npmi_oracle(a: &str, b: &str, docs: &[BTreeSet<String>]) -> f64 {
    let n = docs.len() as f64;
    let pa = docs.iter().filter(|d| d.contains(a)).count() as f64 / n;
    let pb = docs.iter().filter(|d| d.contains(b)).count() as f64 / n;
    let pab = docs.iter().filter(|d| d.contains(a) && d.contains(b)).count() as f64 / n;
    if pab == 0.0 {
        return -1.0;
    }
    if pab == 1.0 {
        return 1.0;
    }
    let eps = 1e-12;
    (((pab + eps) / (pa * pb)).ln() / -(pab + eps).ln()).clamp(-1.0, 1.0)
}

/// Mean NPMI over all pairs of `words`.
pub fn mean_npmi_oracle(words: &[String], docs: &[BTreeSet<String>]) -> f64 {
    let mut sum = 0.0;
    let mut count = 0;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            sum += npmi_oracle(&words[i], &words[j], docs);
            count += 1;
        }
    }
    sum / count as f64
}

/// Three disjoint ten-word vocabularies, thirty documents each.
///
/// The first two are heavy and slightly incoherent: each word appears with
/// probability 0.9, three times if it belongs to the document's favoured
/// half of the vocabulary and twice otherwise, the favoured half alternating
/// between documents. The third is lighter and perfectly coherent: every
/// document repeats every word the same number of times, once or twice.
/// Two topics cover only the heavy blocks, three add the coherent one, and a
/// fourth can only split a heavy block into its two halves.
pub fn three_vocabulary_corpus(seed: u64) -> Vec<Vec<String>> {
    let mut rng = SeededRng::new(seed);
    let words = word_list(&mut rng, 30);
    let mut docs = Vec::new();
    for block in 0..3 {
        let vocab = &words[block * 10..block * 10 + 10];
        for d in 0..30 {
            let c = 1 + rng_below(&mut rng, 2);
            let mut doc = Vec::new();
            for (i, w) in vocab.iter().enumerate() {
                let tf = if block == 2 {
                    c
                } else if rng_below(&mut rng, 10) < 9 {
                    if (i < 5) == (d % 2 == 0) {
                        3
                    } else {
                        2
                    }
                } else {
                    0
                };
                doc.extend(std::iter::repeat(w.clone()).take(tf));
            }
            docs.push(doc);
        }
    }
    docs
}
