//! Seeded synthetic tweet corpora for experiments, benchmarks and tests.

use rand::distr::{weighted::WeightedIndex, Distribution as _};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::RawCorpus;
use crate::error::{Error, Result};

/// Tweets mixing class-indicative words with shared background words.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewedCorpusSpec {
    /// Target share of each class; normalized internally.
    pub class_fractions: Vec<f64>,
    pub num_tweets: usize,
    /// Indicative words per class.
    pub class_words: usize,
    /// Size of the shared background vocabulary (Zipf-distributed).
    pub background_words: usize,
    /// Inclusive tweet length range, in words.
    pub length: (usize, usize),
    /// Chance that a word slot holds an indicative word.
    pub signal_rate: f64,
    /// Chance that an indicative word comes from a random other class.
    pub confusion_rate: f64,
    pub seed: u64,
}

impl Default for SkewedCorpusSpec {
    fn default() -> Self {
        SkewedCorpusSpec {
            class_fractions: vec![0.6, 0.2, 0.1, 0.06, 0.04],
            num_tweets: 2000,
            class_words: 12,
            background_words: 300,
            length: (6, 14),
            signal_rate: 0.2,
            confusion_rate: 0.35,
            seed: 0,
        }
    }
}

fn syllable_word(mut n: usize, prefix: &str) -> String {
    const ONSETS: [&str; 12] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t"];
    const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
    let mut w = prefix.to_owned();
    loop {
        w.push_str(ONSETS[n % ONSETS.len()]);
        n /= ONSETS.len();
        w.push_str(VOWELS[n % VOWELS.len()]);
        n /= VOWELS.len();
        if n == 0 {
            return w;
        }
    }
}

/// Generates a labeled corpus according to `spec`.
pub fn skewed_corpus(spec: &SkewedCorpusSpec) -> Result<RawCorpus> {
    let k = spec.class_fractions.len();
    if k < 2 || spec.class_words == 0 || spec.background_words == 0 || spec.length.0 == 0 || spec.length.0 > spec.length.1 {
        return Err(Error::InvalidArgument("degenerate synthetic corpus spec".into()));
    }
    let classes = WeightedIndex::new(&spec.class_fractions)
        .map_err(|e| Error::InvalidArgument(format!("class fractions: {e}")))?;
    let zipf: Vec<f64> = (1..=spec.background_words).map(|r| 1.0 / r as f64).collect();
    let background = WeightedIndex::new(&zipf).expect("positive weights");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut texts = Vec::with_capacity(spec.num_tweets);
    let mut labels = Vec::with_capacity(spec.num_tweets);
    for _ in 0..spec.num_tweets {
        let label = classes.sample(&mut rng);
        let len = rng.random_range(spec.length.0..=spec.length.1);
        let words: Vec<String> = (0..len)
            .map(|_| {
                if rng.random_bool(spec.signal_rate) {
                    let mut source = label;
                    if rng.random_bool(spec.confusion_rate) {
                        source = rng.random_range(0..k);
                    }
                    let j = rng.random_range(0..spec.class_words);
                    syllable_word(source * spec.class_words + j, "z")
                } else {
                    syllable_word(background.sample(&mut rng), "")
                }
            })
            .collect();
        texts.push(words.join(" "));
        labels.push(label);
    }
    RawCorpus::new(texts, labels, k)
}

const ACCENTED_A: [char; 5] = ['à', 'á', 'â', 'ä', 'ã'];

/// Tweets whose classes differ only in which accented vowel their keywords
/// carry. Removing non-ASCII characters maps every class to the same words.
pub fn accented_corpus(num_classes: usize, num_tweets: usize, seed: u64) -> Result<RawCorpus> {
    if !(2..=ACCENTED_A.len()).contains(&num_classes) {
        return Err(Error::InvalidArgument(format!(
            "accented corpus supports 2..={} classes",
            ACCENTED_A.len()
        )));
    }
    const STEMS: [(&str, &str); 6] = [
        ("c", "fe"),
        ("m", "ma"),
        ("p", "pa"),
        ("s", "la"),
        ("t", "rde"),
        ("gr", "cias"),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut texts = Vec::with_capacity(num_tweets);
    let mut labels = Vec::with_capacity(num_tweets);
    for _ in 0..num_tweets {
        let label = rng.random_range(0..num_classes);
        let mut words = Vec::new();
        for _ in 0..rng.random_range(2..=3) {
            let (head, tail) = STEMS[rng.random_range(0..STEMS.len())];
            words.push(format!("{head}{}{tail}", ACCENTED_A[label]));
        }
        for _ in 0..rng.random_range(2..=5) {
            words.push(syllable_word(rng.random_range(0..40), ""));
        }
        // Shuffle so keyword position carries no signal.
        for i in (1..words.len()).rev() {
            words.swap(i, rng.random_range(0..=i));
        }
        texts.push(words.join(" "));
        labels.push(label);
    }
    RawCorpus::new(texts, labels, num_classes)
}
