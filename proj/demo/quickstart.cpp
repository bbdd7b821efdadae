// Library tour: clean one record, rank its evidence, build explanations,
// score them with ROUGE, and check their coherence with the claim.

#include <iomanip>
#include <iostream>

#include "pubhealth/coherence.hpp"
#include "pubhealth/corpus.hpp"
#include "pubhealth/evidence.hpp"
#include "pubhealth/explain.hpp"
#include "pubhealth/readability.hpp"

int main() {
  using namespace pubhealth;
  const std::string data = PUBHEALTH_DATA_DIR;

  RawRecord raw;
  raw.claim_id = "demo-1";
  raw.claim_text = "Flu vaccines can give people the flu.";
  raw.article_text =
      "The post circulated widely on social media. Readers asked us to look into it. "
      "Flu vaccines given by injection contain inactivated virus that cannot cause infection. "
      "Some people feel mild fever or soreness after the shot. "
      "Those side effects are not the flu and usually last a day or two.";
  raw.explanation_text =
      "Flu vaccines given by injection contain inactivated virus that cannot cause infection. "
      "Mild fever after the shot is a side effect, not the flu.";
  raw.label = "pants-fire";
  raw.source_site = SourceSite::Politifact;

  const auto map = LabelMap::from_file(data + "/label_map.tsv");
  const auto label = normalize_label(raw.label, map);
  if (!label) return 1;
  const auto cleaned = clean(raw, *label);
  if (std::holds_alternative<Rejected>(cleaned)) return 1;
  const auto& rec = std::get<ClaimRecord>(cleaned);
  std::cout << "label: " << raw.label << " -> " << to_string(rec.label) << "\n";

  const auto sentences = segment_sentences(rec.article_text);
  const auto ranking = rank_evidence(rec.claim_id, rec.claim_text, sentences, HashedTfidfBackend(), 2);
  std::cout << std::fixed << std::setprecision(3) << "top evidence:\n";
  for (const auto& s : ranking.selected()) std::cout << "  " << s.score << "  " << sentences[s.index].text << "\n";

  const auto gold = gold_explanation(rec.claim_id, rec.explanation_text);
  for (const auto& e : {lead3(rec.claim_id, sentences), oracle_extractive(sentences, gold)}) {
    const auto r = rouge(e.text(), gold.text());
    std::cout << to_string(e.method) << ": R1 " << r.r1.f1 << "  R2 " << r.r2.f1 << "  RL " << r.rl.f1 << "\n";
  }

  const auto verdict = evaluate_coherence(rec.claim_text, rec.label, gold, TokenOverlapNliBackend());
  std::cout << "gold coherence: SGC " << verdict.sgc << "  WGC " << verdict.wgc << "  LC " << verdict.lc
            << "  reassigned " << verdict.reassigned_indices.size() << "\n";

  const auto easy = EasyWords::from_file(data + "/dale_chall_easy_words.txt");
  std::cout << "claim readability: Flesch " << flesch_kincaid_reading_ease(rec.claim_text) << "  Dale-Chall "
            << dale_chall(rec.claim_text, easy) << "\n";
  return 0;
}
