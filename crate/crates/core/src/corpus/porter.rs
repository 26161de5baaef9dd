//! Porter stemmer over single lowercase tokens.
//!
//! The implementation keeps the classic buffer-and-cursor shape: `b` holds
//! the word's characters, `k` is the index of the last live character and
//! `j` marks the end of the stem candidate while a rule is examined.
//! Replacements are written in place, so `b` may retain dead characters
//! past `k`; callers only ever see `b[..=k]`.
//!
//! Words of length <= 2 are returned unchanged, step 2 rewrites `-bli` to
//! `-ble` (rather than `-abli` to `-able`) and also maps `(m>0) logi` to
//! `log`; these are the standard revisions of the original rule table and
//! the frozen reference vocabulary in the test data was generated under
//! the same revisions.

/// Stems one lowercase token. Non-ASCII characters are treated as
/// consonants, digits likewise, so arbitrary tokenizer output is safe.
pub fn stem(token: &str) -> String {
    let chars: Vec<char> = token.chars().collect();
    if chars.len() <= 2 {
        return token.to_string();
    }
    let mut s = Stemmer {
        k: chars.len() as isize - 1,
        j: 0,
        b: chars,
    };
    s.step1ab();
    s.step1c();
    s.step2();
    s.step3();
    s.step4();
    s.step5();
    s.b[..=s.k as usize].iter().collect()
}

struct Stemmer {
    b: Vec<char>,
    k: isize,
    j: isize,
}

impl Stemmer {
    fn at(&self, i: isize) -> char {
        self.b[i as usize]
    }

    fn cons(&self, i: isize) -> bool {
        match self.at(i) {
            'a' | 'e' | 'i' | 'o' | 'u' => false,
            'y' => i == 0 || !self.cons(i - 1),
            _ => true,
        }
    }

    /// Number of vowel-consonant sequences in `b[0..=j]`.
    fn m(&self) -> u32 {
        let mut n = 0;
        let mut i = 0isize;
        loop {
            if i > self.j {
                return n;
            }
            if !self.cons(i) {
                break;
            }
            i += 1;
        }
        i += 1;
        loop {
            loop {
                if i > self.j {
                    return n;
                }
                if self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
            n += 1;
            loop {
                if i > self.j {
                    return n;
                }
                if !self.cons(i) {
                    break;
                }
                i += 1;
            }
            i += 1;
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..=self.j).any(|i| !self.cons(i))
    }

    fn doublec(&self, j: isize) -> bool {
        j >= 1 && self.at(j) == self.at(j - 1) && self.cons(j)
    }

    /// consonant-vowel-consonant ending at `i`, where the final consonant
    /// is not w, x or y; used to restore a trailing e (hop -> hope).
    fn cvc(&self, i: isize) -> bool {
        if i < 2 || !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.at(i), 'w' | 'x' | 'y')
    }

    /// True when `b[..=k]` ends with `suffix`; on success `j` is set to the
    /// position just before the suffix.
    fn ends(&mut self, suffix: &str) -> bool {
        let len = suffix.len() as isize;
        if len > self.k + 1 {
            return false;
        }
        let start = (self.k - len + 1) as usize;
        if !self.b[start..=(self.k as usize)]
            .iter()
            .copied()
            .eq(suffix.chars())
        {
            return false;
        }
        self.j = self.k - len;
        true
    }

    /// Overwrites the suffix region (from `j+1`) with `s` and moves `k`.
    fn set_to(&mut self, s: &str) {
        let start = (self.j + 1) as usize;
        for (offset, ch) in s.chars().enumerate() {
            if start + offset < self.b.len() {
                self.b[start + offset] = ch;
            } else {
                self.b.push(ch);
            }
        }
        self.k = self.j + s.len() as isize;
    }

    fn replace(&mut self, s: &str) {
        if self.m() > 0 {
            self.set_to(s);
        }
    }

    /// Plural and -ed/-ing removal.
    fn step1ab(&mut self) {
        if self.at(self.k) == 's' {
            if self.ends("sses") {
                self.k -= 2;
            } else if self.ends("ies") {
                self.set_to("i");
            } else if self.at(self.k - 1) != 's' {
                self.k -= 1;
            }
        }
        if self.ends("eed") {
            if self.m() > 0 {
                self.k -= 1;
            }
        } else if (self.ends("ed") || self.ends("ing")) && self.vowel_in_stem() {
            self.k = self.j;
            if self.ends("at") {
                self.set_to("ate");
            } else if self.ends("bl") {
                self.set_to("ble");
            } else if self.ends("iz") {
                self.set_to("ize");
            } else if self.doublec(self.k) {
                self.k -= 1;
                if matches!(self.at(self.k), 'l' | 's' | 'z') {
                    self.k += 1;
                }
            } else if self.m() == 1 && self.cvc(self.k) {
                self.set_to("e");
            }
        }
    }

    /// Terminal y to i when the stem contains a vowel.
    fn step1c(&mut self) {
        if self.ends("y") && self.vowel_in_stem() {
            let k = self.k as usize;
            self.b[k] = 'i';
        }
    }

    /// Double to single suffix, part one (-ational -> -ate, ...). The
    /// early return covers words step 1 shrank to a single character; no
    /// rule here could match them anyway.
    fn step2(&mut self) {
        if self.k < 1 {
            return;
        }
        match self.at(self.k - 1) {
            'a' => {
                if self.ends("ational") {
                    self.replace("ate");
                } else if self.ends("tional") {
                    self.replace("tion");
                }
            }
            'c' => {
                if self.ends("enci") {
                    self.replace("ence");
                } else if self.ends("anci") {
                    self.replace("ance");
                }
            }
            'e' => {
                if self.ends("izer") {
                    self.replace("ize");
                }
            }
            'l' => {
                if self.ends("bli") {
                    self.replace("ble");
                } else if self.ends("alli") {
                    self.replace("al");
                } else if self.ends("entli") {
                    self.replace("ent");
                } else if self.ends("eli") {
                    self.replace("e");
                } else if self.ends("ousli") {
                    self.replace("ous");
                }
            }
            'o' => {
                if self.ends("ization") {
                    self.replace("ize");
                } else if self.ends("ation") {
                    self.replace("ate");
                } else if self.ends("ator") {
                    self.replace("ate");
                }
            }
            's' => {
                if self.ends("alism") {
                    self.replace("al");
                } else if self.ends("iveness") {
                    self.replace("ive");
                } else if self.ends("fulness") {
                    self.replace("ful");
                } else if self.ends("ousness") {
                    self.replace("ous");
                }
            }
            't' => {
                if self.ends("aliti") {
                    self.replace("al");
                } else if self.ends("iviti") {
                    self.replace("ive");
                } else if self.ends("biliti") {
                    self.replace("ble");
                }
            }
            'g' => {
                if self.ends("logi") {
                    self.replace("log");
                }
            }
            _ => {}
        }
    }

    /// Double to single suffix, part two (-icate -> -ic, ...).
    fn step3(&mut self) {
        match self.at(self.k) {
            'e' => {
                if self.ends("icate") {
                    self.replace("ic");
                } else if self.ends("ative") {
                    self.replace("");
                } else if self.ends("alize") {
                    self.replace("al");
                }
            }
            'i' => {
                if self.ends("iciti") {
                    self.replace("ic");
                }
            }
            'l' => {
                if self.ends("ical") {
                    self.replace("ic");
                } else if self.ends("ful") {
                    self.replace("");
                }
            }
            's' => {
                if self.ends("ness") {
                    self.replace("");
                }
            }
            _ => {}
        }
    }

    /// Suffix removal in long stems (m > 1).
    fn step4(&mut self) {
        if self.k < 1 {
            return;
        }
        let matched = match self.at(self.k - 1) {
            'a' => self.ends("al"),
            'c' => self.ends("ance") || self.ends("ence"),
            'e' => self.ends("er"),
            'i' => self.ends("ic"),
            'l' => self.ends("able") || self.ends("ible"),
            'n' => {
                self.ends("ant") || self.ends("ement") || self.ends("ment") || self.ends("ent")
            }
            'o' => {
                if self.ends("ion") && self.j >= 0 && matches!(self.at(self.j), 's' | 't') {
                    true
                } else {
                    self.ends("ou")
                }
            }
            's' => self.ends("ism"),
            't' => self.ends("ate") || self.ends("iti"),
            'u' => self.ends("ous"),
            'v' => self.ends("ive"),
            'z' => self.ends("ize"),
            _ => return,
        };
        if matched && self.m() > 1 {
            self.k = self.j;
        }
    }

    /// Final -e and -ll cleanup.
    fn step5(&mut self) {
        self.j = self.k;
        if self.at(self.k) == 'e' {
            let a = self.m();
            if a > 1 || (a == 1 && !self.cvc(self.k - 1)) {
                self.k -= 1;
            }
        }
        if self.at(self.k) == 'l' && self.doublec(self.k) && self.m() > 1 {
            self.k -= 1;
        }
    }
}
