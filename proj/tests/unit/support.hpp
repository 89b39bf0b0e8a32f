#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "pilock/textio.hpp"

inline std::string corpus_file(const std::string& name) { return std::string(PILOCK_CORPUS) + "/" + name; }

inline pilock::Process corpus_term(const std::string& name, pilock::Calculus c) {
    std::ifstream in(corpus_file(name));
    std::stringstream ss;
    ss << in.rdbuf();
    return pilock::parse(ss.str(), c);
}

inline pilock::Process pil(const std::string& s) { return pilock::parse(s, pilock::Calculus::PIL); }
inline pilock::Process pilw(const std::string& s) { return pilock::parse(s, pilock::Calculus::PILW); }
inline pilock::Process ccsl(const std::string& s) { return pilock::parse(s, pilock::Calculus::CCSL); }
