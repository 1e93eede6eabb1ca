//! Seeded template generator for desk-scale corpora with known labels.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::records::{utterance_key, DialogueRecord, LabeledUtterance, PersonaRecord, Role, Turn};
use crate::error::{Error, Result};
use crate::model::TripletText;
use crate::text::tokenize;

struct Family {
    predicate: &'static str,
    persona: &'static str,
    user: &'static [&'static str],
    train: &'static [&'static str],
    held_out: &'static [&'static str],
    subjects: &'static [&'static str],
}

const I: &[&str] = &["i"];

const FAMILIES: &[Family] = &[
    Family {
        predicate: "have_vehicle",
        persona: "i drive a {x}",
        user: &["i drive a {x}", "my {x} is parked outside", "i just bought a {x} last week"],
        train: &["truck", "jeep", "minivan", "motorcycle", "sedan", "scooter", "tractor", "convertible", "hatchback", "limousine"],
        held_out: &["pickup", "coupe", "camper", "moped", "roadster", "van"],
        subjects: I,
    },
    Family {
        predicate: "have_pet",
        persona: "i have a pet {x}",
        user: &["i have a {x}", "my {x} sleeps on my bed", "walking my {x} is the best part of my day"],
        train: &["dog", "cat", "parrot", "hamster", "rabbit", "turtle", "goldfish", "lizard", "ferret", "snake"],
        held_out: &["pony", "gecko", "iguana", "chinchilla", "canary", "hedgehog"],
        subjects: I,
    },
    Family {
        predicate: "like_food",
        persona: "i love eating {x}",
        user: &["i love eating {x}", "{x} is my favorite food", "i could eat {x} every single day"],
        train: &["pizza", "sushi", "tacos", "pasta", "burgers", "pancakes", "curry", "ramen", "steak", "lasagna"],
        held_out: &["dumplings", "burritos", "falafel", "waffles", "noodles", "kebabs"],
        subjects: I,
    },
    Family {
        predicate: "live_in_general",
        persona: "i live in {x}",
        user: &["i live in {x}", "i grew up in {x} and never left", "{x} has been my home for years"],
        train: &["chicago", "boston", "texas", "ohio", "seattle", "denver", "florida", "canada", "london", "paris"],
        held_out: &["dallas", "oregon", "atlanta", "berlin", "tokyo", "phoenix"],
        subjects: I,
    },
    Family {
        predicate: "like_sports",
        persona: "i like playing {x}",
        user: &["i like playing {x}", "i play {x} every weekend", "{x} is the best sport ever"],
        train: &["basketball", "soccer", "tennis", "baseball", "hockey", "golf", "volleyball", "rugby", "cricket", "swimming"],
        held_out: &["football", "badminton", "lacrosse", "softball", "bowling", "surfing"],
        subjects: I,
    },
    Family {
        predicate: "has_profession",
        persona: "i work as a {x}",
        user: &["i work as a {x}", "my job as a {x} keeps me busy", "i have been a {x} for ten years"],
        train: &["nurse", "teacher", "lawyer", "plumber", "chef", "pilot", "dentist", "firefighter", "cashier", "mechanic"],
        held_out: &["librarian", "architect", "pharmacist", "electrician", "carpenter", "accountant"],
        subjects: I,
    },
    Family {
        predicate: "like_music",
        persona: "i listen to {x} music",
        user: &["i listen to {x} all the time", "{x} is my favorite kind of music", "i love going to {x} concerts"],
        train: &["jazz", "rock", "country", "blues", "metal", "reggae", "techno", "rap", "opera", "folk"],
        held_out: &["punk", "gospel", "disco", "salsa", "grunge", "soul"],
        subjects: I,
    },
    Family {
        predicate: "misc_attribute",
        persona: "{s} is very {x}",
        user: &["{s} is {x}", "{s} is really {x} these days", "everyone says {s} is so {x}"],
        train: &["tall", "shy", "funny", "smart", "lazy", "sick", "brave", "clever", "quiet", "stubborn"],
        held_out: &["grumpy", "polite", "nervous", "cheerful", "honest", "curious"],
        subjects: &["my son", "my daughter", "my wife", "my husband"],
    },
    Family {
        predicate: "like_goto",
        persona: "i like to go to the {x}",
        user: &["i like to go to the {x}", "we go to the {x} every sunday", "the {x} is my happy place"],
        train: &["beach", "park", "library", "gym", "museum", "mall", "zoo", "theater", "lake", "mountains"],
        held_out: &["aquarium", "casino", "stadium", "cinema", "forest", "market"],
        subjects: I,
    },
    Family {
        predicate: "dislike",
        persona: "i hate {x}",
        user: &["i hate {x}", "i can not stand {x}", "{x} makes me so angry"],
        train: &["spiders", "mornings", "traffic", "snow", "clowns", "mosquitoes", "homework", "taxes", "thunder", "crowds"],
        held_out: &["rain", "wasps", "noise", "dust", "heat", "mud"],
        subjects: I,
    },
    Family {
        predicate: "favorite_color",
        persona: "my favorite color is {x}",
        user: &["my favorite color is {x}", "i paint everything {x}", "i always wear {x} clothes"],
        train: &["blue", "red", "green", "yellow", "purple", "orange", "pink", "black", "white", "teal"],
        held_out: &["violet", "silver", "gold", "brown", "crimson", "maroon"],
        subjects: I,
    },
    Family {
        predicate: "like_read",
        persona: "i like reading {x}",
        user: &["i like reading {x}", "i read {x} before bed", "lately i have been reading {x}"],
        train: &["novels", "poetry", "comics", "mysteries", "biographies", "history", "romance", "fantasy", "manga", "thrillers"],
        held_out: &["memoirs", "westerns", "horror", "essays", "classics", "magazines"],
        subjects: I,
    },
];

const CHIT_CHAT: &[&str] = &[
    "hello , how are you ?",
    "hi there !",
    "that sounds nice",
    "what do you do for fun ?",
    "haha that is hilarious",
    "i see , tell me more",
    "good morning",
    "not much , just relaxing",
    "nice to meet you",
    "what about you ?",
    "cool , thanks for sharing",
    "i am doing well today",
    "wow , really ?",
    "that is interesting",
];

const SYSTEM: &[&str] = &[
    "that is great !",
    "tell me more about yourself .",
    "i love that too",
    "how was your day ?",
    "interesting , why is that ?",
    "oh nice , me too",
];

const PREFIXES: &[&str] = &["well ,", "oh ,", "honestly ,", "yeah ,"];

const JOINERS: &[&str] = &["and", ", also"];

/// Number of template families, the upper bound on predicates.
pub const FAMILY_COUNT: usize = FAMILIES.len();

/// Which filler pool surface forms come from. The pools are disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillerSplit {
    Train,
    HeldOut,
}

impl FillerSplit {
    fn pool(self, f: &Family) -> &'static [&'static str] {
        match self {
            FillerSplit::Train => f.train,
            FillerSplit::HeldOut => f.held_out,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub seed: u64,
    pub dialogues: usize,
    pub user_turns: usize,
    pub predicates: usize,
    pub persona_size: usize,
    pub none_ratio: f64,
    pub multi_ratio: f64,
    pub prefix_ratio: f64,
    pub split: FillerSplit,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            dialogues: 100,
            user_turns: 5,
            predicates: 10,
            persona_size: 4,
            none_ratio: 0.3,
            multi_ratio: 0.15,
            prefix_ratio: 0.2,
            split: FillerSplit::Train,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.predicates == 0 || self.predicates > FAMILY_COUNT {
            return Err(Error::Config(format!(
                "predicates must be in 1..={FAMILY_COUNT}, got {}",
                self.predicates
            )));
        }
        if self.persona_size == 0 || self.persona_size > self.predicates {
            return Err(Error::Config("persona_size must be in 1..=predicates".into()));
        }
        for (name, r) in [
            ("none_ratio", self.none_ratio),
            ("multi_ratio", self.multi_ratio),
            ("prefix_ratio", self.prefix_ratio),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("{name} must be in [0, 1]")));
            }
        }
        if self.none_ratio + self.multi_ratio > 1.0 {
            return Err(Error::Config("none_ratio + multi_ratio exceeds 1".into()));
        }
        if self.multi_ratio > 0.0 && self.persona_size < 2 {
            return Err(Error::Config("multi-attribute turns need persona_size >= 2".into()));
        }
        Ok(())
    }

    fn families(&self) -> &'static [Family] {
        &FAMILIES[..self.predicates]
    }

    /// Every token the generator can place in a user utterance.
    pub fn lexicon(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |s: &str| out.extend(tokenize(s));
        for f in self.families() {
            f.user.iter().for_each(|t| add(&t.replace("{x}", "").replace("{s}", "")));
            f.subjects.iter().for_each(|s| add(s));
            self.split.pool(f).iter().for_each(|x| add(x));
        }
        CHIT_CHAT.iter().chain(PREFIXES).chain(JOINERS).for_each(|s| add(s));
        out
    }
}

struct Attribute {
    family: &'static Family,
    subject: &'static str,
    filler: &'static str,
}

impl Attribute {
    fn triplet(&self) -> TripletText {
        TripletText::new(self.subject, self.family.predicate, self.filler)
    }

    fn fill(&self, template: &str) -> String {
        template.replace("{s}", self.subject).replace("{x}", self.filler)
    }
}

/// Generated dialogues, personas and the planted labels of every user turn.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthCorpus {
    pub predicates: Vec<String>,
    pub dialogues: Vec<DialogueRecord>,
    pub personas: Vec<PersonaRecord>,
    pub gold: Vec<LabeledUtterance>,
}

pub fn synth_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let families = config.families();
    let mut corpus = SynthCorpus {
        predicates: families.iter().map(|f| f.predicate.to_string()).collect(),
        dialogues: Vec::with_capacity(config.dialogues),
        personas: Vec::new(),
        gold: Vec::new(),
    };
    let multi_given_attr = if config.none_ratio < 1.0 {
        config.multi_ratio / (1.0 - config.none_ratio)
    } else {
        0.0
    };

    for d in 0..config.dialogues {
        let dialogue_id = format!("d{d:05}");
        let persona_id = format!("p{d:05}");
        let chosen: Vec<&Family> = families
            .choose_multiple(&mut rng, config.persona_size)
            .collect();
        let persona: Vec<Attribute> = chosen
            .into_iter()
            .map(|family| Attribute {
                family,
                subject: family.subjects.choose(&mut rng).expect("subjects"),
                filler: config.split.pool(family).choose(&mut rng).expect("fillers"),
            })
            .collect();
        for a in &persona {
            corpus.personas.push(PersonaRecord {
                persona_id: persona_id.clone(),
                sentence: a.fill(a.family.persona),
                triplet: a.triplet(),
            });
        }

        let mut turns = Vec::with_capacity(2 * config.user_turns);
        for _ in 0..config.user_turns {
            let (text, mut triplets) = if rng.gen::<f64>() < config.none_ratio {
                (CHIT_CHAT.choose(&mut rng).expect("chit-chat").to_string(), Vec::new())
            } else {
                let count = if rng.gen::<f64>() < multi_given_attr { 2 } else { 1 };
                let picked: Vec<&Attribute> = persona.choose_multiple(&mut rng, count).collect();
                let parts: Vec<String> = picked
                    .iter()
                    .map(|a| a.fill(a.family.user.choose(&mut rng).expect("templates")))
                    .collect();
                let mut text = parts.join(&format!(" {} ", JOINERS.choose(&mut rng).expect("joiners")));
                if rng.gen::<f64>() < config.prefix_ratio {
                    text = format!("{} {text}", PREFIXES.choose(&mut rng).expect("prefixes"));
                }
                (text, picked.iter().map(|a| a.triplet()).collect())
            };
            triplets.sort();
            corpus.gold.push(LabeledUtterance {
                key: Some(utterance_key(&dialogue_id, turns.len())),
                utterance: text.clone(),
                triplets,
            });
            turns.push(Turn { role: Role::User, text });
            turns.push(Turn {
                role: Role::System,
                text: SYSTEM.choose(&mut rng).expect("system").to_string(),
            });
        }
        corpus.dialogues.push(DialogueRecord {
            dialogue_id,
            persona_id,
            turns,
        });
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn fillers_are_unique_and_absent_from_templates() {
        let mut owner: HashMap<String, &str> = HashMap::new();
        for f in FAMILIES {
            for x in f.train.iter().chain(f.held_out) {
                for tok in tokenize(x) {
                    assert!(owner.insert(tok.clone(), f.predicate).is_none(), "filler {tok} reused");
                }
            }
        }
        let fixed = FAMILIES
            .iter()
            .flat_map(|f| f.user.iter().chain(std::iter::once(&f.persona)).chain(f.subjects))
            .chain(CHIT_CHAT)
            .chain(SYSTEM)
            .chain(PREFIXES)
            .chain(JOINERS);
        for s in fixed {
            for tok in tokenize(s) {
                assert!(!owner.contains_key(&tok), "template token {tok} is also a filler");
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = SynthConfig { dialogues: 20, ..Default::default() };
        assert_eq!(synth_corpus(&c).unwrap(), synth_corpus(&c).unwrap());
        let other = SynthConfig { seed: 1, ..c.clone() };
        assert_ne!(synth_corpus(&c).unwrap().gold, synth_corpus(&other).unwrap().gold);
    }

    #[test]
    fn ratios_match_configuration() {
        let c = SynthConfig { dialogues: 400, ..Default::default() };
        let corpus = synth_corpus(&c).unwrap();
        let n = corpus.gold.len() as f64;
        let none = corpus.gold.iter().filter(|u| u.triplets.is_empty()).count() as f64 / n;
        let multi = corpus.gold.iter().filter(|u| u.triplets.len() > 1).count() as f64 / n;
        assert!((none - c.none_ratio).abs() <= 0.05, "none fraction {none}");
        assert!((multi - c.multi_ratio).abs() <= 0.05, "multi fraction {multi}");
    }

    #[test]
    fn objects_appear_in_their_utterances() {
        let corpus = synth_corpus(&SynthConfig::default()).unwrap();
        for u in &corpus.gold {
            let toks = tokenize(&u.utterance).join(" ");
            for t in &u.triplets {
                assert!(toks.contains(&t.object), "{} missing from {}", t.object, u.utterance);
                assert!(corpus.predicates.contains(&t.predicate));
            }
        }
    }

    #[test]
    fn splits_share_no_fillers() {
        let train = SynthConfig::default();
        let held = SynthConfig { split: FillerSplit::HeldOut, ..train.clone() };
        let objects = |c: &SynthConfig| -> BTreeSet<String> {
            synth_corpus(c)
                .unwrap()
                .gold
                .into_iter()
                .flat_map(|u| u.triplets.into_iter().map(|t| t.object))
                .collect()
        };
        assert!(objects(&train).is_disjoint(&objects(&held)));
    }

    #[test]
    fn lexicon_covers_generated_text() {
        let c = SynthConfig::default();
        let lex = c.lexicon();
        let corpus = synth_corpus(&c).unwrap();
        for u in &corpus.gold {
            for tok in tokenize(&u.utterance) {
                assert!(lex.contains(&tok), "{tok}");
            }
        }
        assert!((150..=260).contains(&lex.len()), "lexicon size {}", lex.len());
    }

    #[test]
    fn rejects_too_many_predicates() {
        let c = SynthConfig { predicates: FAMILY_COUNT + 1, ..Default::default() };
        assert!(synth_corpus(&c).is_err());
    }
}
