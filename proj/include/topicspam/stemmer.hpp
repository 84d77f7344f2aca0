#pragma once

#include <string>

namespace topicspam {

// Classic Porter suffix-stripping stemmer for English, including the two
// customary departures of the reference implementation (bli->ble, logi->log).
// Operates on lowercase ASCII words; words of length <= 2 pass through.
class PorterStemmer {
public:
    static std::string stem(const std::string& word) {
        if (word.size() <= 2) return word;
        PorterStemmer p(word);
        p.step1ab();
        p.step1c();
        p.step2();
        p.step3();
        p.step4();
        p.step5();
        return p.b_.substr(0, static_cast<std::size_t>(p.k_ + 1));
    }

private:
    std::string b_;
    int k_; // last valid index of the working word
    int j_; // end of stem after a suffix match

    explicit PorterStemmer(const std::string& w)
        : b_(w), k_(static_cast<int>(w.size()) - 1), j_(0) {}

    bool cons(int i) const {
        char c = b_[static_cast<std::size_t>(i)];
        if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return false;
        if (c == 'y') return i == 0 ? true : !cons(i - 1);
        return true;
    }

    // number of VC sequences in b_[0..j]
    int measure(int j) const {
        int n = 0;
        int i = 0;
        for (;;) {
            if (i > j) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        for (;;) {
            for (;;) {
                if (i > j) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            for (;;) {
                if (i > j) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem(int j) const {
        for (int i = 0; i <= j; ++i)
            if (!cons(i)) return true;
        return false;
    }

    bool doublec(int j) const {
        if (j < 1) return false;
        if (b_[static_cast<std::size_t>(j)] != b_[static_cast<std::size_t>(j - 1)]) return false;
        return cons(j);
    }

    // consonant-vowel-consonant ending at i, final consonant not w/x/y
    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        char c = b_[static_cast<std::size_t>(i)];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(const char* s) {
        int l = static_cast<int>(std::char_traits<char>::length(s));
        if (l > k_ + 1) return false;
        if (b_.compare(static_cast<std::size_t>(k_ - l + 1), static_cast<std::size_t>(l), s) != 0)
            return false;
        j_ = k_ - l;
        return true;
    }

    void setto(const char* s) {
        b_.replace(static_cast<std::size_t>(j_ + 1), b_.size(), s);
        k_ = j_ + static_cast<int>(std::char_traits<char>::length(s));
    }

    void r(const char* s) {
        if (measure(j_) > 0) setto(s);
    }

    void step1ab() {
        if (b_[static_cast<std::size_t>(k_)] == 's') {
            if (ends("sses")) k_ -= 2;
            else if (ends("ies")) setto("i");
            else if (b_[static_cast<std::size_t>(k_ - 1)] != 's') --k_;
        }
        if (ends("eed")) {
            if (measure(j_) > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem(j_)) {
            k_ = j_;
            if (ends("at")) setto("ate");
            else if (ends("bl")) setto("ble");
            else if (ends("iz")) setto("ize");
            else if (doublec(k_)) {
                --k_;
                char c = b_[static_cast<std::size_t>(k_)];
                if (c == 'l' || c == 's' || c == 'z') ++k_;
            } else if (measure(k_) == 1 && cvc(k_)) {
                j_ = k_;
                setto("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem(j_)) b_[static_cast<std::size_t>(k_)] = 'i';
    }

    void step2() {
        if (k_ < 1) return;
        switch (b_[static_cast<std::size_t>(k_ - 1)]) {
        case 'a':
            if (ends("ational")) { r("ate"); break; }
            if (ends("tional")) { r("tion"); break; }
            break;
        case 'c':
            if (ends("enci")) { r("ence"); break; }
            if (ends("anci")) { r("ance"); break; }
            break;
        case 'e':
            if (ends("izer")) { r("ize"); break; }
            break;
        case 'l':
            if (ends("bli")) { r("ble"); break; }
            if (ends("alli")) { r("al"); break; }
            if (ends("entli")) { r("ent"); break; }
            if (ends("eli")) { r("e"); break; }
            if (ends("ousli")) { r("ous"); break; }
            break;
        case 'o':
            if (ends("ization")) { r("ize"); break; }
            if (ends("ation")) { r("ate"); break; }
            if (ends("ator")) { r("ate"); break; }
            break;
        case 's':
            if (ends("alism")) { r("al"); break; }
            if (ends("iveness")) { r("ive"); break; }
            if (ends("fulness")) { r("ful"); break; }
            if (ends("ousness")) { r("ous"); break; }
            break;
        case 't':
            if (ends("aliti")) { r("al"); break; }
            if (ends("iviti")) { r("ive"); break; }
            if (ends("biliti")) { r("ble"); break; }
            break;
        case 'g':
            if (ends("logi")) { r("log"); break; }
            break;
        default: break;
        }
    }

    void step3() {
        switch (b_[static_cast<std::size_t>(k_)]) {
        case 'e':
            if (ends("icate")) { r("ic"); break; }
            if (ends("ative")) { r(""); break; }
            if (ends("alize")) { r("al"); break; }
            break;
        case 'i':
            if (ends("iciti")) { r("ic"); break; }
            break;
        case 'l':
            if (ends("ical")) { r("ic"); break; }
            if (ends("ful")) { r(""); break; }
            break;
        case 's':
            if (ends("ness")) { r(""); break; }
            break;
        default: break;
        }
    }

    void step4() {
        if (k_ < 1) return;
        switch (b_[static_cast<std::size_t>(k_ - 1)]) {
        case 'a': if (ends("al")) break; return;
        case 'c': if (ends("ance") || ends("ence")) break; return;
        case 'e': if (ends("er")) break; return;
        case 'i': if (ends("ic")) break; return;
        case 'l': if (ends("able") || ends("ible")) break; return;
        case 'n': if (ends("ant") || ends("ement") || ends("ment") || ends("ent")) break; return;
        case 'o':
            if (ends("ion") && j_ >= 0 &&
                (b_[static_cast<std::size_t>(j_)] == 's' || b_[static_cast<std::size_t>(j_)] == 't'))
                break;
            if (ends("ou")) break;
            return;
        case 's': if (ends("ism")) break; return;
        case 't': if (ends("ate") || ends("iti")) break; return;
        case 'u': if (ends("ous")) break; return;
        case 'v': if (ends("ive")) break; return;
        case 'z': if (ends("ize")) break; return;
        default: return;
        }
        if (measure(j_) > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (b_[static_cast<std::size_t>(k_)] == 'e') {
            int a = measure(k_);
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (b_[static_cast<std::size_t>(k_)] == 'l' && doublec(k_) && measure(k_) > 1) --k_;
    }
};

} // namespace topicspam
