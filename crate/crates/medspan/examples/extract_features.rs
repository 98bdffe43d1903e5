//! Shows the feature set the linear model sees for each token of a short
//! clinical line: word identity, shape, affixes, part-of-speech guesses,
//! unit patterns, dictionary hits, and the copied neighbor context.
//!
//!     cargo run --example extract_features

use medspan::corpus::load_document;
use medspan::features::{extract_features, FallbackPosTagger, Lexicon};

fn main() {
    let lexicon = Lexicon::parse(
        "chest pain\tcui=C0008031;lui=L0380661;rel=;sty=sign-symptom;tty=;abr=\n\
         aspirin\tcui=C0004057;lui=L0004057;rel=;sty=pharmacologic;tty=;abr=asa\n",
    )
    .expect("inline lexicon parses");

    let doc = load_document("Chest pain resolved after 81mg aspirin .", "demo");
    let sentence = &doc.sentences[0];
    let features = extract_features(sentence, &lexicon, &FallbackPosTagger);

    for (token, fv) in sentence.tokens.iter().zip(&features) {
        println!("{} ({} features)", token.text, fv.len());
        for feature in fv {
            println!("  {feature}");
        }
        println!();
    }
}
