#include <exception>
#include <iostream>

#include "llrbc/cli.hpp"
#include "llrbc/common.hpp"

int main(int argc, char** argv) {
  try {
    return llrbc::run_cli(argc, argv);
  } catch (const llrbc::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const llrbc::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
