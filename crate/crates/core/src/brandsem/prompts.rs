use super::{normalize_brand, ReferenceDb};

/// Bumped whenever the wording of either template changes; part of every
/// request hash so stale fixtures miss loudly.
pub const PROMPT_VERSION: &str = "v1";

pub const EMPTY_DB_MARKER: &str = "[REFERENCE DATABASE: EMPTY]";

pub fn s1_prompt(image_ref: &str) -> String {
    format!(
        "You are a street-view signage recognition assistant.\n\
         Image: {image_ref}\n\
         Task: list every brand name that is visibly written or shown as a logo on storefront signage in the image.\n\
         Rules:\n\
         1. Extract only visible text and logos. Do not infer, guess or fabricate brands that are not shown.\n\
         2. Copy brand names as written; do not translate.\n\
         3. If no brand is visible, return an empty list.\n\
         Respond with a single JSON object with exactly two keys and nothing else:\n\
         {{\"brands_found\": [\"<brand>\", ...], \"summary\": \"<one sentence describing the storefronts>\"}}"
    )
}

/// Stage-two prompt. Brands are listed in the order given; the database in
/// canonical-name order.
pub fn s2_prompt(db: &ReferenceDb, raw_brands: &[String]) -> String {
    let mut out = String::from(
        "You are a retail brand analyst classifying storefront brands by market tier.\n\
         Tiers:\n\
         - International Brand: chains operating across multiple countries.\n\
         - Local Brand: chains or well-known names operating within one city or region.\n\
         - Ordinary Brand: independent shops and generic signage.\n\
         Reasoning hierarchy, applied in order:\n\
         1. If a brand or one of its aliases appears in the reference database, use that tier.\n\
         2. Otherwise standardize spelling and language variants to the global brand name and classify it from general knowledge.\n\
         3. If the brand cannot be identified, classify it as Ordinary Brand.\n\
         Reference database (canonical | tier | aliases):\n",
    );
    if db.is_empty() {
        out.push_str(EMPTY_DB_MARKER);
        out.push('\n');
    } else {
        for (name, entry) in db.entries() {
            out.push_str(&format!("- {name} | {} Brand | {}\n", entry.tier, entry.aliases.join(", ")));
        }
    }
    let brands: Vec<String> = raw_brands.iter().map(|b| b.trim().to_string()).collect();
    out.push_str("Brands to classify (JSON array):\n");
    out.push_str(&serde_json::to_string(&brands).expect("string list serializes"));
    out.push_str(
        "\nRespond with a single JSON object mapping each brand exactly as listed to one of \
         \"International\", \"Local\" or \"Ordinary\", and nothing else.",
    );
    out
}

/// Both stage prompts for one image.
pub fn build_prompts(image_ref: &str, db: &ReferenceDb, raw_brands: &[String]) -> (String, String) {
    (s1_prompt(image_ref), s2_prompt(db, raw_brands))
}

/// Unique brands in first-seen order, compared after normalization.
pub(crate) fn dedup_brands(raw: &[String]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    raw.iter()
        .filter(|b| seen.insert(normalize_brand(b)))
        .map(|b| b.trim().to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brandsem::tests::sample_db;

    #[test]
    fn deterministic() {
        let db = sample_db();
        let raw = vec!["Starbucks".to_string(), "Luckin".to_string()];
        assert_eq!(build_prompts("img/1.jpg", &db, &raw), build_prompts("img/1.jpg", &db, &raw));
    }

    #[test]
    fn empty_database_marker() {
        let (_, s2) = build_prompts("a.jpg", &ReferenceDb::default(), &[]);
        assert!(s2.contains(EMPTY_DB_MARKER));
        let (_, s2) = build_prompts("a.jpg", &sample_db(), &[]);
        assert!(!s2.contains(EMPTY_DB_MARKER));
    }

    #[test]
    fn database_names_appear_verbatim() {
        let (s1, s2) = build_prompts("a.jpg", &sample_db(), &["Luckin".to_string()]);
        for name in ["Starbucks", "Nanjing Dapaidang", "Corner Store", "\"Luckin\""] {
            assert!(s2.contains(name), "{name}");
        }
        assert!(s1.contains("without") || s1.contains("Do not infer"));
        assert!(s1.contains("brands_found") && s1.contains("summary"));
    }

    #[test]
    fn dedup_keeps_first_spelling() {
        let raw = vec!["KFC".to_string(), " kfc ".to_string(), "Luckin".to_string()];
        assert_eq!(dedup_brands(&raw), vec!["KFC".to_string(), "Luckin".to_string()]);
    }
}
