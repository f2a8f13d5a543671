#pragma once

#include <string>

#include "orbitree/automaton.hpp"

// Shared fixtures: the four bundled automata, loaded through the parser so
// every test exercises the text format.
namespace corpus {

inline std::string path(const char* file) {
  return std::string(ORBITREE_CORPUS_DIR "/") + file;
}

inline orbitree::MealyAutomaton a1() {
  return orbitree::load_automaton(path("a1.mealy"));
}
inline orbitree::MealyAutomaton a2() {
  return orbitree::load_automaton(path("a2.mealy"));
}
inline orbitree::MealyAutomaton b1() {
  return orbitree::load_automaton(path("b1.mealy"));
}
inline orbitree::MealyAutomaton i3() {
  return orbitree::load_automaton(path("i3.mealy"));
}
inline orbitree::MealyAutomaton cs() {
  return orbitree::load_automaton(path("cs.mealy"));
}

}  // namespace corpus
