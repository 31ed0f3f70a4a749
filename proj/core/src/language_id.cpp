#include "embedkit/language_id.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "embedkit/text.hpp"
#include "embedkit/utf8.hpp"

namespace embedkit::filters {

namespace {

constexpr std::size_t kProfileSize = 600;

// Word-padded code-point trigrams of the normalized text: each word is
// wrapped in '_' sentinels, so "cat" yields _ca, cat, at_.
std::vector<std::string> trigrams(std::string_view text) {
    const std::string norm = normalize_text(text);
    std::vector<std::string> grams;
    std::vector<char32_t> word;
    const auto flush = [&]() {
        if (word.empty()) return;
        std::vector<char32_t> padded;
        padded.reserve(word.size() + 2);
        padded.push_back(U'_');
        padded.insert(padded.end(), word.begin(), word.end());
        padded.push_back(U'_');
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            std::string gram;
            utf8_append(gram, padded[i]);
            utf8_append(gram, padded[i + 1]);
            utf8_append(gram, padded[i + 2]);
            grams.push_back(std::move(gram));
        }
        word.clear();
    };
    for (char32_t cp : utf8_decode(norm)) {
        if (cp == U' ') {
            flush();
        } else {
            word.push_back(cp);
        }
    }
    flush();
    return grams;
}

// Grams ranked by descending frequency (lexicographic tiebreak), truncated
// to the profile size.
std::vector<std::pair<std::string, std::size_t>> rank_profile(std::string_view text) {
    std::map<std::string, std::size_t> counts;
    for (std::string& gram : trigrams(text)) ++counts[gram];
    std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ordered.size() > kProfileSize) ordered.resize(kProfileSize);
    std::vector<std::pair<std::string, std::size_t>> ranked;
    ranked.reserve(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        ranked.emplace_back(ordered[i].first, i);
    }
    return ranked;
}

// Out-of-place distance: rank displacement per document gram, with the
// profile size as the penalty for absent grams.
std::size_t out_of_place(const std::vector<std::pair<std::string, std::size_t>>& doc,
                         const std::vector<std::pair<std::string, std::size_t>>& profile) {
    std::map<std::string_view, std::size_t> profile_rank;
    for (const auto& [gram, rank] : profile) profile_rank.emplace(gram, rank);
    std::size_t total = 0;
    for (const auto& [gram, doc_rank] : doc) {
        auto it = profile_rank.find(gram);
        if (it == profile_rank.end()) {
            total += kProfileSize;
        } else {
            total += doc_rank > it->second ? doc_rank - it->second : it->second - doc_rank;
        }
    }
    return total;
}

// Bundled snippets, a few sentences of ordinary prose per language. They
// exist only to carry trigram statistics.
const std::vector<std::pair<std::string, std::string>>& bundled_samples() {
    static const std::vector<std::pair<std::string, std::string>> samples = {
        {"en",
         "The weather this morning was clear and cold, and the streets of the old town "
         "were quiet before the shops opened. She walked along the river with her dog and "
         "watched the boats move slowly under the bridge. Many people think that reading "
         "every day is the best way to learn a language, but listening and speaking with "
         "friends can help just as much. The children were playing in the garden behind "
         "the house while their father cooked dinner in the kitchen. We should always ask "
         "questions when something is not clear, because good questions lead to better "
         "answers. The train leaves the station at seven and arrives in the city about an "
         "hour later. There is nothing better than a warm cup of tea on a rainy afternoon. "
         "He wrote a long letter to his sister about the things he had seen on his journey "
         "through the mountains and along the coast. The quick brown fox jumps over the "
         "lazy dog whenever the farmer is not watching the field."},
        {"de",
         "Das Wetter war heute Morgen klar und kalt, und die Straßen der Altstadt waren "
         "ruhig, bevor die Geschäfte öffneten. Sie ging mit ihrem Hund am Fluss entlang "
         "und beobachtete die Boote, die langsam unter der Brücke fuhren. Viele Menschen "
         "glauben, dass tägliches Lesen der beste Weg ist, eine Sprache zu lernen, aber "
         "das Sprechen mit Freunden hilft genauso viel. Die Kinder spielten im Garten "
         "hinter dem Haus, während ihr Vater in der Küche das Abendessen kochte. Wir "
         "sollten immer Fragen stellen, wenn etwas nicht klar ist, denn gute Fragen führen "
         "zu besseren Antworten. Der Zug verlässt den Bahnhof um sieben Uhr und kommt etwa "
         "eine Stunde später in der Stadt an. Es gibt nichts Besseres als eine warme Tasse "
         "Tee an einem regnerischen Nachmittag. Er schrieb seiner Schwester einen langen "
         "Brief über die Dinge, die er auf seiner Reise durch die Berge gesehen hatte. Der "
         "schnelle braune Fuchs springt über den faulen Hund, wenn der Bauer das Feld "
         "nicht bewacht."},
        {"fr",
         "Le temps ce matin était clair et froid, et les rues de la vieille ville étaient "
         "calmes avant l'ouverture des magasins. Elle marchait le long de la rivière avec "
         "son chien et regardait les bateaux passer lentement sous le pont. Beaucoup de "
         "gens pensent que lire chaque jour est la meilleure façon d'apprendre une langue, "
         "mais parler avec des amis aide tout autant. Les enfants jouaient dans le jardin "
         "derrière la maison pendant que leur père préparait le dîner dans la cuisine. "
         "Nous devrions toujours poser des questions quand quelque chose n'est pas clair, "
         "parce que les bonnes questions mènent à de meilleures réponses. Le train quitte "
         "la gare à sept heures et arrive en ville environ une heure plus tard. Il n'y a "
         "rien de mieux qu'une tasse de thé chaud par un après-midi pluvieux. Il a écrit "
         "une longue lettre à sa sœur sur ce qu'il avait vu pendant son voyage à travers "
         "les montagnes et le long de la côte."},
        {"es",
         "El tiempo esta mañana era claro y frío, y las calles del casco antiguo estaban "
         "tranquilas antes de que abrieran las tiendas. Ella caminaba junto al río con su "
         "perro y miraba los barcos que pasaban lentamente bajo el puente. Mucha gente "
         "piensa que leer todos los días es la mejor manera de aprender un idioma, pero "
         "hablar con amigos ayuda igual. Los niños jugaban en el jardín detrás de la casa "
         "mientras su padre preparaba la cena en la cocina. Siempre deberíamos hacer "
         "preguntas cuando algo no está claro, porque las buenas preguntas llevan a "
         "mejores respuestas. El tren sale de la estación a las siete y llega a la ciudad "
         "una hora más tarde. No hay nada mejor que una taza de té caliente en una tarde "
         "de lluvia. Escribió una carta larga a su hermana sobre las cosas que había visto "
         "en su viaje por las montañas y a lo largo de la costa."},
        {"it",
         "Il tempo questa mattina era chiaro e freddo, e le strade della città vecchia "
         "erano tranquille prima dell'apertura dei negozi. Lei camminava lungo il fiume "
         "con il suo cane e guardava le barche passare lentamente sotto il ponte. Molte "
         "persone pensano che leggere ogni giorno sia il modo migliore per imparare una "
         "lingua, ma parlare con gli amici aiuta altrettanto. I bambini giocavano in "
         "giardino dietro la casa mentre il padre preparava la cena in cucina. Dovremmo "
         "sempre fare domande quando qualcosa non è chiaro, perché le buone domande "
         "portano a risposte migliori. Il treno parte dalla stazione alle sette e arriva "
         "in città circa un'ora dopo. Non c'è niente di meglio di una tazza di tè caldo in "
         "un pomeriggio di pioggia. Ha scritto una lunga lettera a sua sorella sulle cose "
         "che aveva visto durante il viaggio attraverso le montagne e lungo la costa."},
    };
    return samples;
}

}  // namespace

TrigramLanguageClassifier::TrigramLanguageClassifier()
    : TrigramLanguageClassifier(bundled_samples()) {}

TrigramLanguageClassifier::TrigramLanguageClassifier(
    const std::vector<std::pair<std::string, std::string>>& samples) {
    if (samples.empty()) {
        throw std::invalid_argument("language classifier: needs at least one profile");
    }
    profiles_.reserve(samples.size());
    for (const auto& [language, text] : samples) {
        profiles_.push_back({language, rank_profile(text)});
    }
}

LanguageGuess TrigramLanguageClassifier::classify(std::string_view text) const {
    const auto doc = rank_profile(text);
    if (doc.empty()) return {"und", 0.0};

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::size_t best = kNone, second = kNone;
    std::string best_language;
    for (const Profile& profile : profiles_) {
        const std::size_t d = out_of_place(doc, profile.rank);
        if (d < best) {
            second = best;
            best = d;
            best_language = profile.language;
        } else if (d < second) {
            second = d;
        }
    }
    // Margin normalized by the best distance. Out-of-place distances carry a
    // large floor shared by every profile (grams absent everywhere), so
    // normalizing by the runner-up would compress the margin; d2/d1 - 1
    // separates clear cases from ambiguous ones.
    double confidence;
    if (second == kNone) {
        confidence = 1.0;  // single profile, no alternative to compare against
    } else if (best == 0) {
        confidence = second == 0 ? 0.0 : 1.0;
    } else {
        confidence = static_cast<double>(second) / static_cast<double>(best) - 1.0;
    }
    return {best_language, std::clamp(confidence, 0.0, 1.0)};
}

}  // namespace embedkit::filters
