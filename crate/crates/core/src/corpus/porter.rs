//! Porter stemmer (Porter 1980), original rule set.
//!
//! Suffix stripping proceeds through steps 1a, 1b (with cleanup), 1c, 2, 3,
//! 4, 5a and 5b. Within a step the longest matching suffix decides; if its
//! condition fails no other rule in that step fires. Words shorter than
//! three letters are returned unchanged, as in every practical
//! implementation. Later "departure" rules from the reference C version
//! (logi, bli) are deliberately absent.

/// Stem a single lowercase token. Tokens containing anything outside
/// `a..=z` are returned unchanged.
pub fn stem(token: &str) -> String {
    if token.len() < 3 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut w = token.as_bytes().to_vec();
    step_1a(&mut w);
    step_1b(&mut w);
    step_1c(&mut w);
    step_2(&mut w);
    step_3(&mut w);
    step_4(&mut w);
    step_5a(&mut w);
    step_5b(&mut w);
    String::from_utf8(w).expect("stems stay ASCII")
}

/// Consonant test. `y` is a consonant at the start of the word or after a
/// vowel, and a vowel after a consonant (TOY -> T,Y; SYZYGY -> S,Z,G).
fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// The measure m of [C](VC)^m[V]: the number of vowel-to-consonant
/// transitions.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let cons = is_cons(w, i);
        if prev_vowel && cons {
            m += 1;
        }
        prev_vowel = !cons;
    }
    m
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

/// *d: ends with a double consonant.
fn ends_double_cons(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1)
}

/// *o: ends consonant-vowel-consonant where the final consonant is not
/// w, x or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_cons(w, n - 3)
        && !is_cons(w, n - 2)
        && is_cons(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends_with(w: &[u8], suffix: &str) -> bool {
    w.len() >= suffix.len() && &w[w.len() - suffix.len()..] == suffix.as_bytes()
}

/// Replace a matched suffix of `len` bytes with `replacement`.
fn set_suffix(w: &mut Vec<u8>, len: usize, replacement: &str) {
    let keep = w.len() - len;
    w.truncate(keep);
    w.extend_from_slice(replacement.as_bytes());
}

fn step_1a(w: &mut Vec<u8>) {
    if ends_with(w, "sses") {
        set_suffix(w, 4, "ss");
    } else if ends_with(w, "ies") {
        set_suffix(w, 3, "i");
    } else if ends_with(w, "ss") {
        // unchanged
    } else if ends_with(w, "s") {
        set_suffix(w, 1, "");
    }
}

fn step_1b(w: &mut Vec<u8>) {
    if ends_with(w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            set_suffix(w, 1, "");
        }
        return;
    }
    let removed = if ends_with(w, "ed") && has_vowel(&w[..w.len() - 2]) {
        set_suffix(w, 2, "");
        true
    } else if ends_with(w, "ing") && has_vowel(&w[..w.len() - 3]) {
        set_suffix(w, 3, "");
        true
    } else {
        false
    };
    if removed {
        if ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") {
            w.push(b'e');
        } else if ends_double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
            w.pop();
        } else if measure(w) == 1 && ends_cvc(w) {
            w.push(b'e');
        }
    }
}

fn step_1c(w: &mut [u8]) {
    if ends_with(w, "y") && has_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

/// (suffix, replacement) pairs, longest first so that the longest matching
/// suffix decides.
const STEP_2: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("ization", "ize"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("tional", "tion"),
    ("biliti", "ble"),
    ("entli", "ent"),
    ("ousli", "ous"),
    ("ation", "ate"),
    ("alism", "al"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("ator", "ate"),
    ("eli", "e"),
];

const STEP_3: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ness", ""),
    ("ful", ""),
];

fn apply_rule_list(w: &mut Vec<u8>, rules: &[(&str, &str)]) {
    for &(suffix, replacement) in rules {
        if ends_with(w, suffix) {
            if measure(&w[..w.len() - suffix.len()]) > 0 {
                set_suffix(w, suffix.len(), replacement);
            }
            return;
        }
    }
}

fn step_2(w: &mut Vec<u8>) {
    apply_rule_list(w, STEP_2);
}

fn step_3(w: &mut Vec<u8>) {
    apply_rule_list(w, STEP_3);
}

const STEP_4: &[&str] = &[
    "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ion", "ism", "ate", "iti",
    "ous", "ive", "ize", "al", "er", "ic", "ou",
];

fn step_4(w: &mut Vec<u8>) {
    for &suffix in STEP_4 {
        if ends_with(w, suffix) {
            let stem = &w[..w.len() - suffix.len()];
            let allowed = measure(stem) > 1
                && (suffix != "ion" || matches!(stem.last(), Some(b's') | Some(b't')));
            if allowed {
                set_suffix(w, suffix.len(), "");
            }
            return;
        }
    }
}

fn step_5a(w: &mut Vec<u8>) {
    if ends_with(w, "e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
}

fn step_5b(w: &mut Vec<u8>) {
    if measure(w) > 1 && ends_double_cons(w) && w[w.len() - 1] == b'l' {
        w.pop();
    }
}
