# kinematics tests package
